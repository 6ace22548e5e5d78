#pragma once

#include <optional>
#include <vector>

#include "lbkin/common.hpp"

namespace lbkin {

enum class PotentialKind { debye, gaussian, tabulated };

// Radial Fourier profile V̂(|k|) of the interaction, truncated at k_max.
// Profiles are nonnegative and bounded; vhat() is 0 beyond k_max.
struct InteractionPotential {
  PotentialKind kind = PotentialKind::debye;
  double amplitude = 1.0;
  double screening = 1.0;  // debye: kappa; gaussian: sigma
  double k_max = 6.0;
  std::vector<std::pair<double, double>> table;  // tabulated: (r, value), r ascending

  static InteractionPotential debye(double amplitude, double kappa, double k_max);
  static InteractionPotential gaussian(double amplitude, double sigma, double k_max);
  static InteractionPotential tabulated(std::vector<std::pair<double, double>> pts, double k_max);

  double vhat(double r) const;
  void validate() const;
};

// Landau collision strength by direct quadrature of the kernel over the
// hyperplane orthogonal to a reference direction, with the dielectric set to
// one: the full matrix reduces to c(V)/|w| times the projection, and c(V) is
// returned. Checked for isotropy and for quadrature self-consistency; throws
// NumericalError if either fails. n_r is forced odd (Simpson).
double landau_constant(const InteractionPotential& pot, int dim,
                       int n_r = 1025, int n_ang = 64,
                       std::optional<VecV> direction = std::nullopt);

// Orthonormal basis {e_1,...,e_{dim-1}} of the hyperplane orthogonal to w,
// with w sign-canonicalized (first nonzero component positive) so that w and
// -w produce the identical basis vectors bitwise.
std::vector<VecV> hyperplane_basis(const VecV& w);

}  // namespace lbkin
