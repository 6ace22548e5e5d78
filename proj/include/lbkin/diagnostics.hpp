#pragma once

#include "lbkin/linop.hpp"

namespace lbkin {

// H-functional of the full (positive) distribution F, with x-weight included.
// Values below 1e-300 are floored and counted; more than 1% floored nodes is
// treated as corrupted input.
double entropy(const PhaseSpaceField& F, i64* floored = nullptr);

// integral of <v>^{2l} exp(2K<v>^theta) |f|^2 over phase space. theta in (0,2],
// K >= 0; theta = 2 with K >= 1 is rejected (weight beats the Gaussian decay of
// the states this measures), as is an overflowing weight at the grid edge.
double weighted_l2(const PhaseSpaceField& f, double l, double theta, double K);

struct FitResult {
  std::string model;
  double rate = 0;    // decay exponent (poly) or stretch rate (stretched)
  double offset = 0;  // fitted log-amplitude
  double r2 = 0;
  int n_samples = 0;
};

// least squares of log y against -rate * log<t> over t in [t0, t1]
FitResult decay_fit_poly(const std::vector<double>& t, const std::vector<double>& y,
                         double t0, double t1);
// least squares of log y against -rate * t^{theta/(theta+1)}
FitResult decay_fit_stretched(const std::vector<double>& t, const std::vector<double>& y,
                              double theta, double t0, double t1);

// Spectral inversion of -lap_x phi = source on the torus; the source mean is
// removed first (recorded in *mean_removed) and the output has zero mean.
std::vector<double> poisson_solve(const TorusGrid& torus, std::vector<double> source,
                                  double* mean_removed = nullptr);

struct MacroIdentityResult {
  double xi2 = 0;         // -(v . grad_x psi, d^a f) by direct quadrature
  double macro_term = 0;  // the closed-form kernel-coefficient term
  double e_term = 0;      // micro-micro remainder
  double residual = 0;    // |xi2 - (macro_term + e_term)|
  double rel = 0;         // residual / max(|xi2|, tiny)
};

// Test-function identity for the fluid coefficient p in {'a','b','c'} against
// the snapshot f; alpha_axis < 0 checks the underived identity, otherwise a
// first spatial derivative along that axis is applied. Spectral x-derivatives
// throughout; requires n_x > 1.
MacroIdentityResult macro_identity_check(const PhaseSpaceField& f, char p, int alpha_axis = -1);

}  // namespace lbkin
