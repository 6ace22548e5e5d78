#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lbkin/common.hpp"
#include "lbkin/grid.hpp"

using namespace lbkin;

namespace {

double ip_v(const VelocityGrid& vel, const std::vector<double>& f, const std::vector<double>& g) {
  return pairwise_sum(vel.num_nodes(), [&](i64 vn) {
    return vel.node_weight[static_cast<size_t>(vn)] * f[static_cast<size_t>(vn)] *
           g[static_cast<size_t>(vn)];
  });
}

PhaseSpaceField constant_in_x(const TorusGrid& torus, const VelocityGrid& vel,
                              const std::vector<double>& g) {
  PhaseSpaceField f(torus, vel);
  for (i64 xn = 0; xn < torus.num_nodes(); ++xn)
    for (i64 vn = 0; vn < vel.num_nodes(); ++vn) f.at(xn, vn) = g[static_cast<size_t>(vn)];
  return f;
}

i64 center_node(const VelocityGrid& vel) {
  // odd n_v puts a node exactly at the origin
  std::vector<int> digits(static_cast<size_t>(vel.d_v), (vel.n_v - 1) / 2);
  return vel.index(digits.data());
}

}  // namespace

TEST_CASE("grid validation enforces the documented shapes") {
  CHECK_NOTHROW((TorusGrid{1, 1}).validate());
  CHECK_NOTHROW((TorusGrid{1, 16}).validate());
  CHECK_THROWS_AS((TorusGrid{1, 2}).validate(), ConfigError);
  CHECK_THROWS_AS((TorusGrid{1, 15}).validate(), ConfigError);
  CHECK_THROWS_AS((TorusGrid{3, 16}).validate(), ConfigError);

  CHECK_THROWS_AS(VelocityGrid(2, 16, -1.0), ConfigError);
  CHECK_THROWS_AS(VelocityGrid(2, 3, 6.0), ConfigError);
  CHECK_THROWS_AS(VelocityGrid(4, 16, 6.0), ConfigError);
  // a box too small for its spacing cannot carry the equilibrium weight
  CHECK_THROWS_AS(VelocityGrid(2, 17, 4.0), ConfigError);

  TorusGrid t{2, 8};
  CHECK(t.node_weight() == doctest::Approx(std::pow(2.0 * M_PI / 8.0, 2)).epsilon(1e-15));
  VelocityGrid vel(2, 17, 5.0);
  CHECK(vel.h() == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(vel.nodes1.front() == -5.0);
  CHECK(vel.nodes1.back() == 5.0);
  double wsum = 0;
  for (double w : vel.weights1) wsum += w;
  CHECK(wsum == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("maxwellian values and discrete mass") {
  VelocityGrid v2(2, 33, 8.0);
  auto mu2 = maxwellian(v2);
  CHECK(mu2[static_cast<size_t>(center_node(v2))] ==
        doctest::Approx(1.0 / M_PI).epsilon(1e-15));

  VelocityGrid v3(3, 21, 6.0);
  auto mu3 = maxwellian(v3);
  CHECK(mu3[static_cast<size_t>(center_node(v3))] ==
        doctest::Approx(std::pow(M_PI, -1.5)).epsilon(1e-15));

  // mass deficit is pure tail truncation: the trapezoid aliasing error of a
  // Gaussian at these spacings is below roundoff
  double m2 = pairwise_sum(v2.num_nodes(),
                           [&](i64 vn) { return v2.node_weight[static_cast<size_t>(vn)] *
                                                mu2[static_cast<size_t>(vn)]; });
  CHECK(std::abs(m2 - 1.0) <= 2 * std::erfc(8.0) + 1e-14);
  double m3 = pairwise_sum(v3.num_nodes(),
                           [&](i64 vn) { return v3.node_weight[static_cast<size_t>(vn)] *
                                                mu3[static_cast<size_t>(vn)]; });
  // truncation is negligible at v_max = 6; trapezoid aliasing at h = 0.6
  // contributes ~1e-11
  CHECK(std::abs(m3 - 1.0) <= 3 * std::erfc(6.0) + 2e-11);

  auto smu = sqrt_maxwellian(v2);
  for (size_t i = 0; i < smu.size(); i += 97)
    CHECK(smu[i] == doctest::Approx(std::sqrt(mu2[i])).epsilon(1e-15));
}

TEST_CASE("collision invariant basis is discretely orthonormal") {
  for (int d : {2, 3}) {
    VelocityGrid vel(d, d == 2 ? 49 : 29, 7.0);
    auto chi = kernel_basis(vel);
    REQUIRE(static_cast<int>(chi.size()) == d + 2);
    for (size_t a = 0; a < chi.size(); ++a)
      for (size_t b = a; b < chi.size(); ++b) {
        double g = ip_v(vel, chi[a], chi[b]);
        CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) <= 1e-10);
      }
  }
}

TEST_CASE("energy basis vector at the origin") {
  VelocityGrid vel(2, 33, 6.0);
  auto chi = kernel_basis(vel);
  // (2|v|^2 - d)/sqrt(2d) sqrt(mu) at v = 0, d = 2: -1/sqrt(pi)
  CHECK(chi[3][static_cast<size_t>(center_node(vel))] ==
        doctest::Approx(-1.0 / std::sqrt(M_PI)).epsilon(1e-14));
}

TEST_CASE("odd moments of the weight vanish by symmetry") {
  VelocityGrid vel(2, 32, 6.0);
  auto chi = kernel_basis(vel);
  for (int i = 0; i < 2; ++i) {
    double m = pairwise_sum(vel.num_nodes(), [&](i64 vn) {
      return vel.node_weight[static_cast<size_t>(vn)] * vel.coords(vn)[i] *
             chi[0][static_cast<size_t>(vn)] * chi[0][static_cast<size_t>(vn)];
    });
    CHECK(std::abs(m) <= 1e-15);
  }
}

TEST_CASE("fluid moments of basis fields") {
  TorusGrid torus{1, 8};
  VelocityGrid vel(2, 48, 7.0);
  auto chi = kernel_basis(vel);
  double xm = std::pow(2.0 * M_PI, 1);

  auto m0 = moments(constant_in_x(torus, vel, chi[0]));
  CHECK(m0.mass == doctest::Approx(xm).epsilon(1e-10));
  CHECK(std::abs(m0.momentum[0]) <= 1e-12);
  CHECK(std::abs(m0.momentum[1]) <= 1e-12);
  CHECK(m0.energy == doctest::Approx(xm).epsilon(1e-10));  // d_v/2 * mass

  PhaseSpaceField zero(torus, vel);
  auto mz = moments(zero);
  CHECK(mz.mass == 0.0);
  CHECK(mz.energy == 0.0);

  for (int i = 0; i < 2; ++i) {
    auto mi = moments(constant_in_x(torus, vel, chi[static_cast<size_t>(1 + i)]));
    CHECK(mi.momentum[i] == doctest::Approx(xm / std::sqrt(2.0)).epsilon(1e-10));
    CHECK(std::abs(mi.momentum[1 - i]) <= 1e-12);
    CHECK(std::abs(mi.mass) <= 1e-12);
  }

  // moments_v agrees with the field version on one x-block
  auto mv = moments_v(vel, chi[0].data(), xm / 8.0);
  CHECK(mv.mass * 8.0 == doctest::Approx(m0.mass).epsilon(1e-14));
}

TEST_CASE("golden quartic moment identities") {
  for (int d : {2, 3}) {
    VelocityGrid vel(d, 64, 8.0);
    auto rows = moment_table(vel);
    bool saw_v4 = false, saw_v22 = false;
    for (const auto& r : rows) {
      if (r.name == "int v1^4 mu") {
        CHECK(r.analytic == 0.75);
        saw_v4 = true;
      }
      if (r.name == "int v1^2 v2^2 mu") {
        CHECK(r.analytic == 0.25);
        saw_v22 = true;
      }
      CHECK(std::abs(r.discrete - r.analytic) <= 1e-6);
    }
    CHECK(saw_v4);
    CHECK(saw_v22);
    // the four projection coefficients behind the fluid test functions
    double expect[4] = {(d + 2) / 4.0, 0.5, (d + 2) / std::sqrt(2.0 * d),
                        1.0 / std::sqrt(2.0 * d)};
    const char* names[4] = {"<v11 |v|^2 smu, chi0>", "<v11 smu, chi0>",
                            "<v11 |v|^2 smu, chiE>", "<v11 smu, chiE>"};
    for (int q = 0; q < 4; ++q) {
      bool saw = false;
      for (const auto& r : rows)
        if (r.name == names[q]) {
          CHECK(r.analytic == doctest::Approx(expect[q]).epsilon(1e-15));
          saw = true;
        }
      CHECK(saw);
    }
  }
}

TEST_CASE("velocity derivative is fourth order on the maxwellian") {
  auto sup_err = [](int n) {
    VelocityGrid vel(2, n, 6.0);
    auto mu = maxwellian(vel);
    PhaseSpaceField f = constant_in_x(TorusGrid{1, 1}, vel, mu);
    PhaseSpaceField g = d_dv(f, 0);
    double worst = 0;
    for (i64 vn = 0; vn < vel.num_nodes(); ++vn) {
      double expect = -2.0 * vel.coords(vn)[0] * mu[static_cast<size_t>(vn)];
      worst = std::max(worst, std::abs(g.at(0, vn) - expect));
    }
    return worst;
  };
  double e1 = sup_err(33), e2 = sup_err(65);
  REQUIRE(e2 > 0);
  CHECK(std::log2(e1 / e2) >= 3.5);
}

TEST_CASE("spatial derivative is spectral") {
  TorusGrid torus{1, 16};
  VelocityGrid vel(2, 9, 4.0);

  PhaseSpaceField c(torus, vel);
  for (i64 xn = 0; xn < torus.num_nodes(); ++xn)
    for (i64 vn = 0; vn < vel.num_nodes(); ++vn) c.at(xn, vn) = 3.25;
  PhaseSpaceField dc = d_dx(c, 0);
  for (i64 xn = 0; xn < torus.num_nodes(); ++xn)
    for (i64 vn = 0; vn < vel.num_nodes(); ++vn) CHECK(std::abs(dc.at(xn, vn)) <= 1e-14);

  PhaseSpaceField s(torus, vel);
  for (i64 xn = 0; xn < torus.num_nodes(); ++xn)
    for (i64 vn = 0; vn < vel.num_nodes(); ++vn)
      s.at(xn, vn) = std::sin(torus.coord1(static_cast<int>(xn)));
  PhaseSpaceField ds = d_dx(s, 0);
  for (i64 xn = 0; xn < torus.num_nodes(); ++xn) {
    double expect = std::cos(torus.coord1(static_cast<int>(xn)));
    for (i64 vn = 0; vn < vel.num_nodes(); ++vn)
      CHECK(std::abs(ds.at(xn, vn) - expect) <= 1e-13);
  }
}

TEST_CASE("spatial and velocity derivatives commute") {
  TorusGrid torus{1, 8};
  VelocityGrid vel(2, 17, 5.0);
  Rng rng(42);
  PhaseSpaceField f(torus, vel);
  for (auto& x : f.values) x = rng.normal();

  PhaseSpaceField a = d_dv(d_dx(f, 0), 1);
  PhaseSpaceField b = d_dx(d_dv(f, 1), 0);
  double scale = 0, diff = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    scale = std::max(scale, std::abs(a.values[i]));
    diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
  }
  REQUIRE(scale > 0);
  CHECK(diff <= 1e-13 * scale);
}

TEST_CASE("two dimensional torus round trip") {
  TorusGrid torus{2, 8};
  VelocityGrid vel(2, 9, 4.0);
  PhaseSpaceField f(torus, vel);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double x1 = torus.coord1(i), x2 = torus.coord1(j);
      for (i64 vn = 0; vn < vel.num_nodes(); ++vn)
        f.at(i * 8 + j, vn) = std::sin(x1) * std::cos(2.0 * x2);
    }
  PhaseSpaceField d2 = d_dx(f, 1);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double x1 = torus.coord1(i), x2 = torus.coord1(j);
      CHECK(std::abs(d2.at(i * 8 + j, 0) - std::sin(x1) * (-2.0) * std::sin(2.0 * x2)) <= 1e-13);
    }
}
