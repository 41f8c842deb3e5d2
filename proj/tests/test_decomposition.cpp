#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qrc/decomposition.hpp"
#include "test_util.hpp"

using Catch::Approx;
using qrc::AltTensor;
using qrc::GridDomain;
namespace maps = qrc::maps;
namespace forms = qrc::forms;

namespace {

AltTensor random_simple(std::mt19937_64& rng, int m, int k) {
  AltTensor a = AltTensor::covector(testutil::random_vector(rng, m));
  for (int i = 1; i < k; ++i) a = qrc::wedge(a, AltTensor::covector(testutil::random_vector(rng, m)));
  return a;
}

}  // namespace

TEST_CASE("support plane", "[decomposition]") {
  SECTION("examples") {
    auto U = qrc::support_plane(AltTensor::dx(3, {2, 3}));
    REQUIRE(U.rows() == 3);
    REQUIRE(U.cols() == 2);
    REQUIRE(U(1, 0) == Approx(1.0));
    REQUIRE(U(2, 1) == Approx(1.0));
    REQUIRE(std::abs(U(0, 0)) + std::abs(U(0, 1)) < 1e-12);

    auto a = qrc::wedge(AltTensor::covector(std::vector<double>{1.0, 1.0, 0.0}), AltTensor::dx(3, {3}));
    auto V = qrc::support_plane(a);
    REQUIRE(V(0, 0) == Approx(1.0 / std::sqrt(2.0)));
    REQUIRE(V(1, 0) == Approx(1.0 / std::sqrt(2.0)));
    REQUIRE(V(2, 1) == Approx(1.0));
  }
  SECTION("non-simple and zero covectors are rejected") {
    REQUIRE_THROWS_AS(qrc::support_plane(forms::symplectic(2).eval(std::vector<double>(4, 0.0))), std::invalid_argument);
    REQUIRE_THROWS_AS(qrc::support_plane(AltTensor(3, 2)), std::invalid_argument);
  }
  SECTION("random simple covectors: kernel oracle") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
      int m = 2 + static_cast<int>(rng() % 5);
      int k = 1 + static_cast<int>(rng() % m);
      AltTensor a = random_simple(rng, m, k);
      auto U = qrc::support_plane(a);
      REQUIRE((U.transpose() * U - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-9);
      // vectors orthogonal to the plane contract a to zero
      Eigen::MatrixXd P = Eigen::MatrixXd::Identity(m, m) - U * U.transpose();
      for (int i = 0; i < m; ++i) {
        std::vector<double> v(P.col(i).data(), P.col(i).data() + m);
        REQUIRE(qrc::interior_product(v, a).mass() < 1e-9 * (1.0 + a.mass()));
      }
      // on the plane a is a volume form with the full mass
      REQUIRE(std::abs(qrc::pullback(a, U)[0]) == Approx(a.mass()).epsilon(1e-9));
    }
  }
}

TEST_CASE("rotation isometry", "[decomposition]") {
  SECTION("3 dx2 ^ dx3 at (0, 0, 5)") {
    std::vector<double> p{0.0, 0.0, 5.0};
    auto r = qrc::rotation_isometry(3.0 * AltTensor::dx(3, {2, 3}), p);
    Eigen::Matrix3d A;
    A << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    REQUIRE((r.L.A - A).norm() < 1e-12);
    REQUIRE(r.L.det == 1.0);
    REQUIRE(r.transformed[0] == Approx(3.0));
    REQUIRE(r.transformed.mass() == Approx(3.0));
    auto z = r.L(p);
    for (double v : z) REQUIRE(v == 0.0);
  }
  SECTION("random simple covectors become |a| dx_1..n") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
      int m = 2 + static_cast<int>(rng() % 5);
      int n = 1 + static_cast<int>(rng() % m);
      AltTensor a = random_simple(rng, m, n);
      auto p = testutil::random_vector(rng, m);
      auto r = qrc::rotation_isometry(a, p);
      REQUIRE((r.L.A * r.L.A.transpose() - Eigen::MatrixXd::Identity(m, m)).norm() < 1e-9);
      REQUIRE(std::abs(std::abs(r.L.A.determinant()) - 1.0) < 1e-9);
      // independent transform: evaluate a on the rows of A (the columns of L^{-1})
      std::vector<std::vector<double>> frame(n);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd row = r.L.A.row(i).transpose();
        frame[i].assign(row.data(), row.data() + m);
      }
      double v = oracle::eval_form(m, n, testutil::coeff_vector(a), frame);
      REQUIRE(v == Approx(a.mass()).epsilon(1e-9));
      REQUIRE(r.transformed[0] == Approx(a.mass()).epsilon(1e-9));
      for (std::size_t I = 1; I < r.transformed.size(); ++I) REQUIRE(std::abs(r.transformed[I]) < 1e-9 * a.mass());
    }
  }
  SECTION("non-simple forms point to the dominant simple part") {
    try {
      qrc::rotation_isometry(forms::symplectic(2), std::vector<double>(4, 0.0));
      FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
      REQUIRE(std::string(e.what()).find("dominant_simple_part") != std::string::npos);
    }
  }
}

TEST_CASE("localization", "[decomposition]") {
  SECTION("constant c") {
    REQUIRE(qrc::localization_constant(1.0, 2.0) == Approx(4.0));
    REQUIRE_THROWS_AS(qrc::localization_constant(2.0, 2.0), std::invalid_argument);
    // scan oracle: smallest c >= 2K on a fine lattice with c/(c-1-K) <= K'/K
    for (auto [K, Kp] : std::vector<std::pair<double, double>>{{1.0, 1.5}, {2.0, 3.0}, {1.5, 10.0}, {3.0, 3.1}}) {
      double c = 2.0 * K;
      while (!(c > 1.0 + K && c / (c - 1.0 - K) <= Kp / K)) c += 1e-5;
      REQUIRE(qrc::localization_constant(K, Kp) == Approx(c).margin(2e-5));
    }
  }
  SECTION("constant forms localize everywhere") {
    auto L = qrc::localization(forms::volume(2, 3), std::vector<double>(3, 0.0), 1.0, 2.0);
    REQUIRE(std::isinf(L.rho));
  }
  SECTION("Heisenberg star at the origin") {
    // omega(y) - omega(0) = (y1 dx1 + y2 dx2)/2 ^ dx3 has comass |(y1, y2)|/2; bound 1/4 -> r = 1/2
    auto L = qrc::localization(forms::heisenberg_star(), std::vector<double>(3, 0.0), 1.0, 2.0);
    REQUIRE(L.c == Approx(4.0));
    // sampled bisection lands within sampling accuracy of 0.5; the 0.9 factor keeps rho inside the exact radius
    REQUIRE(L.rho == Approx(0.45).epsilon(1e-3));
    REQUIRE(L.rho < 0.5);
    // sampled difference-comass oracle
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    auto w0 = forms::heisenberg_star().eval(std::vector<double>(3, 0.0));
    for (int t = 0; t < 200; ++t) {
      std::vector<double> y{g(rng), g(rng), g(rng)};
      double s = L.rho * std::pow(std::uniform_real_distribution<double>()(rng), 1.0 / 3.0) /
                 std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
      for (auto& v : y) v *= s;
      auto d = forms::heisenberg_star().eval(y) - w0;
      REQUIRE(oracle::sampled_comass(3, 2, testutil::coeff_vector(d), 500, 5) <= 0.25 + 1e-12);
    }
  }
}

TEST_CASE("graph decomposition", "[decomposition]") {
  SECTION("(z^2, 0) against dx1 ^ dx2 at (1, 0)") {
    auto f = maps::embed(maps::winding(2), 4);
    qrc::DecompositionOptions opt;
    opt.resolution = 48;
    auto r = qrc::graph_decompose(f, forms::simple(4, {1, 2}), std::vector<double>{1.0, 0.0}, opt);
    REQUIRE(r.verified);
    REQUIRE(r.sandwich_ok);
    REQUIRE(r.fhat_verified);
    REQUIRE(std::isinf(r.rho));
    REQUIRE(r.radius == Approx(0.5));
    REQUIRE(r.margin_min == Approx(1.0));
    REQUIRE(r.margin_max == Approx(1.0));
    REQUIRE(r.fhat_sup_K == Approx(1.0));
    REQUIRE(r.grid_hash.size() == 16);
    REQUIRE(r.image == std::vector<double>{1.0, 0.0, 0.0, 0.0});
  }
  SECTION("graph over the plane against the Heisenberg star") {
    auto f = maps::graph(2, {"0.3*sin(x1)*x2"});
    qrc::DecompositionOptions opt;
    opt.K = 1.5;
    opt.Kp = 3.0;
    opt.resolution = 32;
    auto r = qrc::graph_decompose(f, forms::heisenberg_star(), std::vector<double>{0.2, -0.1}, opt);
    INFO(r.diagnostics);
    REQUIRE(r.verified);
    REQUIRE(r.margin_min >= r.lower_bound);
    REQUIRE(r.margin_max <= r.upper_bound);
    // the image of D stays in the localization ball
    REQUIRE(r.radius > 0.0);
    REQUIRE(r.radius <= 0.5);
    // oracle at the anchor: margin equals |omega_p| J_fhat / star f^* omega, independently assembled
    auto j = f.jet(std::vector<double>{0.2, -0.1});
    Eigen::MatrixXd Dh = r.L.A.topRows(2) * j.D;
    double jac = qrc::star_pullback(j, forms::heisenberg_star());
    double mg = r.comass_at_image * Dh.determinant() / jac;
    REQUIRE(mg == Approx(1.0).epsilon(1e-9));
  }
  SECTION("critical points are inconclusive") {
    auto r = qrc::graph_decompose(maps::embed(maps::winding(2), 4), forms::simple(4, {1, 2}),
                                  std::vector<double>{0.0, 0.0});
    REQUIRE(r.inconclusive);
    REQUIRE_FALSE(r.verified);
  }
  SECTION("a map with large distortion fails the sandwich") {
    auto f = maps::embed(maps::expression(2, {"x1", "0.05*x2"}), 3);
    qrc::DecompositionOptions opt;
    opt.K = 1.0;
    opt.Kp = 2.0;
    opt.resolution = 16;
    auto r = qrc::graph_decompose(f, forms::simple(3, {1, 2}), std::vector<double>{0.0, 0.0}, opt);
    REQUIRE_FALSE(r.verified);
    REQUIRE_FALSE(r.fhat_verified);
  }
}

TEST_CASE("dominant simple part", "[decomposition]") {
  SECTION("(z, z^2) against the symplectic form at (1, 0)") {
    auto f = maps::moment_curve(2);
    std::vector<double> x{1.0, 0.0};
    auto d = qrc::dominant_simple_part(f, forms::symplectic(2), x, 1.0);
    REQUIRE(d.J.to_string() == "(3,4)");
    REQUIRE(d.constant == Approx(12.0));
    // Leibniz oracle on a finite-difference Jacobian
    auto fd = oracle::fd_jacobian([&](const std::vector<double>& p) { return f(p); }, x);
    auto subs = oracle::subsets(4, 2);
    auto u = forms::symplectic(2).eval(f(x));
    for (std::size_t I = 0; I < subs.size(); ++I) {
      std::vector<double> minor{fd[subs[I][0] * 2], fd[subs[I][0] * 2 + 1], fd[subs[I][1] * 2], fd[subs[I][1] * 2 + 1]};
      REQUIRE(d.terms[I] == Approx(u[I] * oracle::leibniz_det(minor, 2)).margin(1e-6));
    }
    REQUIRE(d.terms[5] == Approx(4.0));
    REQUIRE(d.radius > 0.0);
    // the bound holds on the returned ball
    for (double t : {0.0, 0.5, 1.0}) {
      std::vector<double> y{1.0 + t * d.radius, 0.0};
      double jac = qrc::star_pullback(f.jet(y), forms::symplectic(2));
      double term = qrc::star_pullback(f.jet(y), d.simple_form);
      REQUIRE(jac <= d.constant * term + 1e-12);
    }
  }
  SECTION("n = m uses the whole domain") {
    auto d = qrc::dominant_simple_part(maps::winding(2), forms::volume(2, 2), std::vector<double>{1.0, 0.0}, 1.0);
    REQUIRE(d.whole_domain);
    REQUIRE(d.constant == Approx(2.0));
  }
  SECTION("no positive term") {
    REQUIRE_THROWS_AS(qrc::dominant_simple_part(maps::conjugate(), forms::volume(2, 2), std::vector<double>{1.0, 0.0}, 1.0),
                      std::domain_error);
  }
}

TEST_CASE("Jacobian positivity", "[decomposition]") {
  auto grid = GridDomain::ball({0.0, 0.0}, 1.0, 32);
  auto p = qrc::jacobian_positivity(maps::winding(3), forms::volume(2, 2), grid);
  REQUIRE(p.positive_fraction == 1.0);
  REQUIRE(p.violations.empty());
  auto q = qrc::jacobian_positivity(maps::conjugate(), forms::volume(2, 2), grid);
  REQUIRE(q.positive_fraction == 0.0);
  REQUIRE(q.violations.size() == q.n_samples);
  auto c = qrc::jacobian_positivity(maps::constant(2, {1.0, 0.0}), forms::volume(2, 2), grid);
  REQUIRE(c.positive_fraction == 0.0);
  REQUIRE(c.violations.empty());
}
