#include "lbkin/common.hpp"

#include <atomic>
#include <thread>

namespace lbkin {

namespace {
std::atomic<int> g_threads{0};

int resolve_threads() {
  int t = g_threads.load();
  if (t > 0) return t;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

void set_threads(int n) {
  if (n < 0) throw ConfigError("threads must be >= 0 (0 = auto), got " + std::to_string(n));
  g_threads.store(n);
}

int threads() { return resolve_threads(); }

void parallel_for(i64 n, const std::function<void(i64, i64)>& body) {
  if (n <= 0) return;
  int t = resolve_threads();
  if (t <= 1 || n < 2048) {
    body(0, n);
    return;
  }
  i64 chunks = std::min<i64>(t, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(chunks));
  for (i64 c = 0; c < chunks; ++c) {
    i64 b = n * c / chunks, e = n * (c + 1) / chunks;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& th : pool) th.join();
}

namespace {
constexpr i64 kLeaf = 512;

double pairwise_range(i64 b, i64 e, const std::function<double(i64)>& term) {
  if (e - b <= kLeaf) {
    double s = 0;
    for (i64 i = b; i < e; ++i) s += term(i);
    return s;
  }
  i64 m = b + (e - b) / 2;
  return pairwise_range(b, m, term) + pairwise_range(m, e, term);
}

double pairwise_range_arr(const double* a, i64 b, i64 e) {
  if (e - b <= kLeaf) {
    double s = 0;
    for (i64 i = b; i < e; ++i) s += a[i];
    return s;
  }
  i64 m = b + (e - b) / 2;
  return pairwise_range_arr(a, b, m) + pairwise_range_arr(a, m, e);
}
}  // namespace

double pairwise_sum(i64 n, const std::function<double(i64)>& term) {
  if (n <= 0) return 0.0;
  int t = resolve_threads();
  if (t <= 1 || n < 4 * kLeaf) return pairwise_range(0, n, term);
  // Evaluate the two fixed halves concurrently; the tree (and hence the
  // rounding) is identical to the sequential recursion.
  i64 m = n / 2;
  double lo = 0, hi = 0;
  std::thread th([&] { lo = pairwise_range(0, m, term); });
  hi = pairwise_range(m, n, term);
  th.join();
  return lo + hi;
}

double pairwise_sum(const double* a, i64 n) {
  if (n <= 0) return 0.0;
  return pairwise_range_arr(a, 0, n);
}

// ---- rng -------------------------------------------------------------------

namespace {
constexpr int kNN = 312;
constexpr std::uint64_t kMatrixA = 0xB5026F5AA96619E9ULL;
constexpr std::uint64_t kUpper = 0xFFFFFFFF80000000ULL;
constexpr std::uint64_t kLower = 0x7FFFFFFFULL;
}  // namespace

Rng::Rng(std::uint64_t seed) : idx_(kNN + 1), spare_(0), has_spare_(false) {
  s_[0] = seed;
  for (int i = 1; i < kNN; ++i)
    s_[i] = 6364136223846793005ULL * (s_[i - 1] ^ (s_[i - 1] >> 62)) + static_cast<std::uint64_t>(i);
  idx_ = kNN;
}

void Rng::refill() {
  for (int i = 0; i < kNN; ++i) {
    std::uint64_t x = (s_[i] & kUpper) | (s_[(i + 1) % kNN] & kLower);
    s_[i] = s_[(i + 156) % kNN] ^ (x >> 1);
    if (x & 1ULL) s_[i] ^= kMatrixA;
  }
  idx_ = 0;
}

std::uint64_t Rng::raw() {
  if (idx_ >= kNN) refill();
  std::uint64_t x = s_[idx_++];
  x ^= (x >> 29) & 0x5555555555555555ULL;
  x ^= (x << 17) & 0x71D67FFFEDA60000ULL;
  x ^= (x << 37) & 0xFFF7EEE000000000ULL;
  x ^= x >> 43;
  return x;
}

double Rng::uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

// ---- derivative bands -------------------------------------------------------

DerivBand DerivBand::fourth_order(int n, double h) {
  if (n < 6) throw ConfigError("derivative stencil needs >= 6 nodes, got " + std::to_string(n));
  DerivBand d;
  d.n = n;
  d.rows.assign(static_cast<size_t>(n), {});
  double c = 1.0 / (12.0 * h);
  auto row = [&](int i, std::initializer_list<std::pair<int, double>> entries) {
    for (auto [j, v] : entries) d.rows[static_cast<size_t>(i)].push_back({j, v * c});
  };
  row(0, {{0, -25}, {1, 48}, {2, -36}, {3, 16}, {4, -3}});
  row(1, {{0, -3}, {1, -10}, {2, 18}, {3, -6}, {4, 1}});
  for (int i = 2; i < n - 2; ++i)
    row(i, {{i - 2, 1}, {i - 1, -8}, {i + 1, 8}, {i + 2, -1}});
  row(n - 2, {{n - 5, -1}, {n - 4, 6}, {n - 3, -18}, {n - 2, 10}, {n - 1, 3}});
  row(n - 1, {{n - 5, 3}, {n - 4, -16}, {n - 3, 36}, {n - 2, -48}, {n - 1, 25}});
  d.cols.assign(static_cast<size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (auto [j, v] : d.rows[static_cast<size_t>(i)]) d.cols[static_cast<size_t>(j)].push_back({i, v});
  return d;
}

DerivBand DerivBand::scaled(const std::vector<double>& s) const {
  DerivBand d;
  d.n = n;
  d.rows.assign(static_cast<size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (auto [j, v] : rows[static_cast<size_t>(i)])
      d.rows[static_cast<size_t>(i)].push_back({j, s[static_cast<size_t>(i)] * v / s[static_cast<size_t>(j)]});
  d.cols.assign(static_cast<size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (auto [j, v] : d.rows[static_cast<size_t>(i)]) d.cols[static_cast<size_t>(j)].push_back({i, v});
  return d;
}

DerivBand DerivBand::weighted_transpose(const std::vector<double>& a,
                                        const std::vector<double>& b) const {
  // C = diag(a) * A^T * diag(b); entry C_ij = a_i A_ji b_j reuses A's stored
  // coefficients so adjoint identities hold without recomputing stencils.
  DerivBand d;
  d.n = n;
  d.rows.assign(static_cast<size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (auto [j, v] : cols[static_cast<size_t>(i)])
      d.rows[static_cast<size_t>(i)].push_back({j, a[static_cast<size_t>(i)] * v * b[static_cast<size_t>(j)]});
  d.cols.assign(static_cast<size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (auto [j, v] : d.rows[static_cast<size_t>(i)]) d.cols[static_cast<size_t>(j)].push_back({i, v});
  return d;
}

void DerivBand::apply(const double* in, double* out, int stride) const {
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (auto [j, v] : rows[static_cast<size_t>(i)]) s += v * in[static_cast<size_t>(j) * static_cast<size_t>(stride)];
    out[static_cast<size_t>(i) * static_cast<size_t>(stride)] = s;
  }
}

}  // namespace lbkin
