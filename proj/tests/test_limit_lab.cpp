#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "qrc/limit_lab.hpp"

using Catch::Approx;
using qrc::CutoffSpec;
using qrc::GridDomain;
namespace maps = qrc::maps;
namespace forms = qrc::forms;
namespace families = qrc::families;

TEST_CASE("uniform distance", "[limit]") {
  auto disc = GridDomain::ball({0.0, 0.0}, 1.0, 128);
  REQUIRE(qrc::uniform_distance(maps::winding(2), maps::winding(2), disc) == 0.0);
  auto seq = families::poly_perturb();
  for (int j : {1, 4, 16}) {
    // sup |z| / j over cell centers of the unit disc, by brute force
    double oracle = 0.0;
    std::vector<double> x(2);
    for (std::size_t i = 0; i < disc.cell_count(); ++i)
      if (disc.cell_center(i, x)) oracle = std::max(oracle, std::hypot(x[0], x[1]) / j);
    REQUIRE(qrc::uniform_distance(seq.member(j), seq.limit, disc) == Approx(oracle).epsilon(1e-12));
    REQUIRE(oracle == Approx(1.0 / j).epsilon(0.02));
  }
  auto osc = families::oscillation();
  auto sq = GridDomain::box({0.0, 0.0}, {1.0, 1.0}, 256);
  REQUIRE(qrc::uniform_distance(osc.member(32), osc.limit, sq) == Approx(1.0 / 32).epsilon(0.01));
}

TEST_CASE("weak pullback residual", "[limit]") {
  auto zeta = CutoffSpec::smooth_bump({0.5, 0.0}, 0.25, 0.5);
  auto grid = GridDomain::box({0.0, -0.5}, {1.0, 0.5}, 256);
  auto F = forms::volume(2, 2);
  auto seq = families::poly_perturb();
  REQUIRE(qrc::weak_pullback_residual(seq.limit, seq.limit, zeta, F, grid) == 0.0);
  // |2z + 1/j|^2 - |2z|^2 = 4x/j + 1/j^2 and zeta is symmetric about x = 1/2, so residual = Z (2/j + 1/j^2)
  double Z = qrc::grid_integrate(grid, [&](std::span<const double> x) { return zeta.psi(x); });
  for (int j : {2, 4, 8, 16}) {
    double r = qrc::weak_pullback_residual(seq.member(j), seq.limit, zeta, F, grid);
    REQUIRE(r == Approx(Z * (2.0 / j + 1.0 / (j * j))).epsilon(1e-9));
  }
  double r4 = qrc::weak_pullback_residual(seq.member(4), seq.limit, zeta, F, grid);
  double r8 = qrc::weak_pullback_residual(seq.member(8), seq.limit, zeta, F, grid);
  REQUIRE(r8 / r4 == Approx(17.0 / 36.0).epsilon(1e-9));
  SECTION("oscillation: weak convergence without pointwise convergence of Df") {
    auto osc = families::oscillation();
    auto box = GridDomain::box({0.0, -0.5}, {1.0, 0.5}, 512);
    for (int j : {4, 8, 16, 32}) {
      double r = qrc::weak_pullback_residual(osc.member(j), osc.limit, zeta, F, box);
      // det = 1 exactly for every j
      REQUIRE(r < 1e-12);
    }
    // a non-Jacobian density does not converge: int zeta |Df_j|^2 stays above int zeta |Df|^2
    double e32 = qrc::grid_integrate(box, [&](std::span<const double> x) {
      return zeta.psi(x) * std::pow(qrc::operator_norm(osc.member(32).jet(x)), 2);
    });
    REQUIRE(e32 > 1.2 * Z);
  }
}

TEST_CASE("energy lower semicontinuity", "[limit]") {
  auto U = GridDomain::box({0.0, 0.0}, {1.0, 1.0}, 256);
  SECTION("constant sequence has no gap") {
    auto r = qrc::energy_lsc_check(families::constant_sequence(maps::winding(2)), U);
    REQUIRE(r.gap == 0.0);
    REQUIRE(r.lsc_holds);
  }
  SECTION("oscillation family keeps a gap") {
    auto r = qrc::energy_lsc_check(families::oscillation({8, 16, 32}), U);
    REQUIRE(r.limit_energy == Approx(1.0));
    // oracle: sigma_max^2 of [[1, 0], [c, 1]] is (2 + c^2 + |c| sqrt(c^2 + 4)) / 2 with c = cos(32 x)
    double e32 = oracle::simpson(
        [](double x) {
          double c = std::cos(32.0 * x);
          return (2.0 + c * c + std::abs(c) * std::sqrt(c * c + 4.0)) / 2.0;
        },
        0.0, 1.0, 20000);
    REQUIRE(r.energies.back() == Approx(e32).epsilon(1e-3));
    REQUIRE(r.gap > 0.05);
    REQUIRE(r.lsc_holds);
  }
  SECTION("bump perturbation: gap closes") {
    std::vector<double> lo{0, 0}, hi{1, 1}, v{1.0, 0.0};
    auto r = qrc::energy_lsc_check(families::bump_perturb(maps::winding(2), lo, hi, v, {4, 16, 64}), U);
    REQUIRE(r.lsc_holds);
    REQUIRE(std::abs(r.energies.back() - r.limit_energy) < std::abs(r.energies.front() - r.limit_energy));
  }
}

TEST_CASE("limit distortion", "[limit]") {
  auto annulus = GridDomain::annulus({0.0, 0.0}, 0.5, 1.0, 64);
  SECTION("z^2 + z/j, holomorphic against vol") {
    // members with j >= 4 have no critical point in the annulus (2z + 1/j = 0 at |z| = 1/(2j))
    auto rep = qrc::limit_distortion(families::poly_perturb({4, 8, 16, 32}), forms::volume(2, 2), annulus, 1.0);
    REQUIRE(rep.verified);
    REQUIRE(rep.sup_K <= 1.0 + 1e-6);
  }
  SECTION("constant sequence gives the member's report") {
    auto f = maps::radial_stretch(2, 1.5);
    auto a = qrc::limit_distortion(families::constant_sequence(f), forms::volume(2, 2), annulus, 1.5);
    auto b = qrc::verify_qrc(f, forms::volume(2, 2), annulus, 1.5);
    REQUIRE(a.sup_K == b.sup_K);
    REQUIRE(a.verified == b.verified);
  }
  SECTION("graph family against dx1 ^ dx2 verified at the sup member K") {
    auto seq = families::graph_family("0.3*x1*x2", {1, 2, 4, 8});
    auto F = forms::simple(3, {1, 2});
    auto sq = GridDomain::box({-1.0, -1.0}, {1.0, 1.0}, 48);
    double Kmax = 1.0;
    for (int j : seq.indices) Kmax = std::max(Kmax, qrc::verify_qrc(seq.member(j), F, sq, 100.0).sup_K);
    auto rep = qrc::limit_distortion(seq, F, sq, Kmax);
    REQUIRE(rep.verified);
    REQUIRE(rep.sup_K < Kmax);
  }
  SECTION("a failing member is named") {
    auto seq = families::graph_family("0.3*x1*x2", {1, 2});
    auto sq = GridDomain::box({-1.0, -1.0}, {1.0, 1.0}, 16);
    try {
      qrc::limit_distortion(seq, forms::simple(3, {1, 2}), sq, 1.0);
      FAIL("expected a precondition error");
    } catch (const qrc::PreconditionError& e) {
      REQUIRE(std::string(e.what()).find("j = 1") != std::string::npos);
    }
  }
}

TEST_CASE("convergence report", "[limit]") {
  auto zeta = CutoffSpec::smooth_bump({0.5, 0.0}, 0.25, 0.5);
  auto grid = GridDomain::box({0.0, -0.5}, {1.0, 0.5}, 128);
  auto r = qrc::convergence(families::poly_perturb({4, 8}), forms::volume(2, 2), zeta, grid);
  REQUIRE(r.rows.size() == 2);
  REQUIRE(r.rows[1].uniform_distance < r.rows[0].uniform_distance);
  REQUIRE(r.fitted_rate_constant == Approx(r.rows[1].weak_residual * 8));
  std::ostringstream os;
  qrc::write_convergence_csv(os, r);
  REQUIRE(os.str().rfind("j,uniform_distance,weak_residual,n_energy\n4,", 0) == 0);
}
