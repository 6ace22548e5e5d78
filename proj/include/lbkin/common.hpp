#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lbkin {

using i64 = std::int64_t;

// Error taxonomy, mapped to CLI exit codes 2/3/4 by the frontend.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& m) : std::runtime_error(m) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

// Fixed-capacity vector/matrix over R^d, d in {1,2,3}. Runtime dimension so
// the same code paths serve every configuration; capacity 3 keeps it POD.
struct VecV {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  int dim = 0;

  VecV() = default;
  explicit VecV(int d) : dim(d) {}
  VecV(int d, double a, double b = 0.0, double cc = 0.0) : c{a, b, cc}, dim(d) {}

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }
};

inline VecV operator+(VecV a, const VecV& b) {
  for (int i = 0; i < a.dim; ++i) a[i] += b[i];
  return a;
}
inline VecV operator-(VecV a, const VecV& b) {
  for (int i = 0; i < a.dim; ++i) a[i] -= b[i];
  return a;
}
inline VecV operator*(double s, VecV a) {
  for (int i = 0; i < a.dim; ++i) a[i] *= s;
  return a;
}
inline double dot(const VecV& a, const VecV& b) {
  double s = 0;
  for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const VecV& a) { return std::sqrt(dot(a, a)); }

struct MatV {
  std::array<double, 9> m{};  // row-major d x d
  int dim = 0;

  MatV() = default;
  explicit MatV(int d) : dim(d) { m.fill(0.0); }
  double& operator()(int i, int j) { return m[static_cast<size_t>(i * dim + j)]; }
  double operator()(int i, int j) const { return m[static_cast<size_t>(i * dim + j)]; }
};

inline MatV operator+(MatV a, const MatV& b) {
  for (int i = 0; i < a.dim * a.dim; ++i) a.m[static_cast<size_t>(i)] += b.m[static_cast<size_t>(i)];
  return a;
}
inline MatV operator*(double s, MatV a) {
  for (int i = 0; i < a.dim * a.dim; ++i) a.m[static_cast<size_t>(i)] *= s;
  return a;
}
inline VecV operator*(const MatV& A, const VecV& x) {
  VecV y(x.dim);
  for (int i = 0; i < A.dim; ++i) {
    double s = 0;
    for (int j = 0; j < A.dim; ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
  return y;
}
inline double frob(const MatV& A) {
  double s = 0;
  for (int i = 0; i < A.dim * A.dim; ++i) s += A.m[static_cast<size_t>(i)] * A.m[static_cast<size_t>(i)];
  return std::sqrt(s);
}
// rank-1 accumulate: A += s * u u^T
inline void add_outer(MatV& A, double s, const VecV& u) {
  for (int i = 0; i < A.dim; ++i)
    for (int j = 0; j < A.dim; ++j) A(i, j) += s * u[i] * u[j];
}

// ---- threading ----------------------------------------------------------

// Global worker count. 0 = auto (hardware concurrency).
void set_threads(int n);
int threads();

// Static block partition of [0,n) over the worker pool. The partition is a
// function of n alone, so per-index work is identical for every thread count.
void parallel_for(i64 n, const std::function<void(i64, i64)>& body);

// Deterministic pairwise summation: the reduction tree is fixed by the index
// range (split at the midpoint, leaf width 512), so the result is bitwise
// identical regardless of how many workers evaluate the subtrees.
double pairwise_sum(i64 n, const std::function<double(i64)>& term);
double pairwise_sum(const double* a, i64 n);

// ---- rng -----------------------------------------------------------------

// mt19937_64 + Box-Muller. std::normal_distribution's output sequence is
// implementation-defined; this one is pinned by the standard's engine spec.
struct Rng {
  explicit Rng(std::uint64_t seed);
  double uniform();   // [0,1)
  double normal();    // N(0,1)
  std::uint64_t raw();

 private:
  std::uint64_t s_[312];
  int idx_;
  double spare_;
  bool has_spare_;
  void refill();
};

// ---- 1-D derivative bands -------------------------------------------------

// 4th-order first-derivative matrix on a uniform n-point grid: centered
// 5-point stencil inside, one-sided 5-point rows at the two edges on each
// side. Exact on polynomials of degree <= 4. Stored as explicit sparse rows
// and columns so transpose application reuses the same coefficients bitwise.
struct DerivBand {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> rows, cols;

  static DerivBand fourth_order(int n, double h);
  // Similarity scale: B_ij = s_i * A_ij / s_j.
  DerivBand scaled(const std::vector<double>& s) const;
  // C_ij = a_i * A_ji * b_j  (weighted transpose, used for adjoints).
  DerivBand weighted_transpose(const std::vector<double>& a,
                               const std::vector<double>& b) const;
  void apply(const double* in, double* out, int stride = 1) const;
};

inline bool all_finite(const double* a, i64 n) {
  for (i64 i = 0; i < n; ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

}  // namespace lbkin
