#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qrc/map_engine.hpp"
#include "test_util.hpp"

using Catch::Approx;
using qrc::AltTensor;
using qrc::MapSpec;
namespace maps = qrc::maps;
namespace forms = qrc::forms;

namespace {

std::vector<double> fd_of(const MapSpec& f, const std::vector<double>& x) {
  return oracle::fd_jacobian([&](const std::vector<double>& p) { return f(p); }, x);
}

double power_iteration_norm(const Eigen::MatrixXd& D) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(D.cols());
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd w = D.transpose() * (D * v);
    if (w.norm() == 0.0) return 0.0;
    v = w.normalized();
  }
  return (D * v).norm();
}

// sum over n-row subsets of det^2, via Leibniz
double sum_minor_squares(const Eigen::MatrixXd& D) {
  const int m = static_cast<int>(D.rows()), n = static_cast<int>(D.cols());
  double s = 0.0;
  for (const auto& rows : oracle::subsets(m, n)) {
    std::vector<double> a;
    for (int r : rows)
      for (int c = 0; c < n; ++c) a.push_back(D(r, c));
    double d = oracle::leibniz_det(a, n);
    s += d * d;
  }
  return s;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int m, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd D(m, n);
  for (Eigen::Index i = 0; i < D.size(); ++i) D.data()[i] = g(rng);
  return D;
}

}  // namespace

TEST_CASE("jets", "[map][jet]") {
  SECTION("z^2 at (1, 0)") {
    auto j = maps::winding(2).jet(std::vector<double>{1.0, 0.0});
    REQUIRE(j.value == std::vector<double>{1.0, 0.0});
    REQUIRE(j.D.isApprox((Eigen::Matrix2d() << 2, 0, 0, 2).finished()));
    auto fd = fd_of(maps::winding(2), {1.0, 0.0});
    for (int i = 0; i < 4; ++i) REQUIRE(j.D(i / 2, i % 2) == Approx(fd[i]).margin(1e-8));
  }
  SECTION("identity") {
    auto j = maps::identity(3).jet(std::vector<double>{0.3, -2.0, 8.0});
    REQUIRE(j.D == Eigen::MatrixXd::Identity(3, 3));
  }
  SECTION("(z, z^2) at (1, 0)") {
    auto j = maps::moment_curve(2).jet(std::vector<double>{1.0, 0.0});
    Eigen::MatrixXd expect(4, 2);
    expect << 1, 0, 0, 1, 2, 0, 0, 2;
    REQUIRE(j.D == expect);
  }
  SECTION("domain errors name the point") {
    auto f = maps::expression(2, {"log(x1)", "x2"});
    try {
      f.jet(std::vector<double>{-1.0, 0.5});
      FAIL("expected a domain error");
    } catch (const qrc::DomainError& e) {
      REQUIRE(std::string(e.what()).find("(-1,0.5)") != std::string::npos);
    }
  }
  SECTION("AD matches central differences on 100 random points per family") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<MapSpec> fams{
        maps::holomorphic_curve({{{0.0, 0.0}, {1.0, 0.5}, {0.0, -2.0}}, {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.3, 0.1}}}),
        maps::winding(3),
        maps::conjugate(),
        maps::graph(2, {"0.1*sin(x1)*x2", "0.2*x1*x2"}),
        maps::radial_stretch(3, 2.5),
        maps::sine_graph(),
        maps::product(maps::winding(2), maps::conjugate()),
        maps::compose(maps::winding(2), maps::sine_graph()),
        maps::moment_curve(3)};
    for (const auto& f : fams) {
      for (int t = 0; t < 100; ++t) {
        std::vector<double> x(f.source_dim());
        for (auto& c : x) c = u(rng);
        auto j = f.jet(x);
        auto fd = fd_of(f, x);
        for (int r = 0; r < j.D.rows(); ++r)
          for (int c = 0; c < j.D.cols(); ++c) {
            double a = j.D(r, c), b = fd[r * j.D.cols() + c];
            REQUIRE(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
          }
      }
    }
  }
  SECTION("dimension checks") {
    REQUIRE_THROWS_AS(MapSpec("bad", 3, {qrc::Expr::var(0), qrc::Expr::var(1)}), std::invalid_argument);
    REQUIRE_THROWS_AS(maps::compose(maps::winding(2), maps::moment_curve(2)), std::invalid_argument);
    REQUIRE_THROWS_AS(maps::winding(2)(std::vector<double>{1.0}), std::invalid_argument);
  }
}

TEST_CASE("differential norms", "[map][norms]") {
  SECTION("examples") {
    REQUIRE(qrc::operator_norm((Eigen::MatrixXd(2, 2) << 2, 0, 0, 1).finished()) == Approx(2.0));
    auto j = maps::moment_curve(2).jet(std::vector<double>{1.0, 0.0});
    REQUIRE(qrc::operator_norm(j) == Approx(std::sqrt(5.0)).epsilon(1e-12));
    REQUIRE(qrc::operator_norm(j) == Approx(power_iteration_norm(j.D)).epsilon(1e-12));
    REQUIRE(qrc::operator_norm(Eigen::MatrixXd::Zero(3, 2)) == 0.0);
    REQUIRE(qrc::top_minor_norm(j) == Approx(5.0).epsilon(1e-12));
    REQUIRE(sum_minor_squares(j.D) == Approx(25.0));
    REQUIRE(qrc::top_minor_norm(Eigen::MatrixXd::Identity(3, 3)) == 1.0);
    Eigen::MatrixXd rank1(3, 2);
    rank1 << 1, 2, 2, 4, -1, -2;
    REQUIRE(qrc::top_minor_norm(rank1) == Approx(0.0).margin(1e-7));
  }
  SECTION("Cauchy-Binet and Hadamard on random jets") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 300; ++t) {
      int n = 1 + t % 4, m = n + t % 3;
      Eigen::MatrixXd D = random_matrix(rng, m, n);
      double gram = (D.transpose() * D).determinant();
      REQUIRE(sum_minor_squares(D) == Approx(gram).epsilon(1e-10));
      REQUIRE(qrc::top_minor_norm(D) <= std::pow(qrc::operator_norm(D), n) * (1.0 + 1e-12));
      REQUIRE(qrc::operator_norm(D) == Approx(power_iteration_norm(D)).epsilon(1e-9));
    }
  }
}

TEST_CASE("pullbacks", "[map][pullback]") {
  SECTION("z^2 against dx^dy at (1, 0) is the Jacobian 4") {
    auto j = maps::winding(2).jet(std::vector<double>{1.0, 0.0});
    REQUIRE(qrc::star_pullback(j, forms::volume(2, 2)) == Approx(4.0));
    auto fd = fd_of(maps::winding(2), {1.0, 0.0});
    REQUIRE(qrc::star_pullback(j, forms::volume(2, 2)) == Approx(fd[0] * fd[3] - fd[1] * fd[2]).epsilon(1e-8));
  }
  SECTION("(z, z^2) against the symplectic form is J_f1 + J_f2 = 5") {
    auto j = maps::moment_curve(2).jet(std::vector<double>{1.0, 0.0});
    REQUIRE(qrc::star_pullback(j, forms::symplectic(2)) == Approx(5.0));
  }
  SECTION("(f, 0, t) against the hyperbolic volume form vanishes") {
    // F = (z^2, 0, t) into R^2 x R x (0, inf) with t = 1.5 fixed; omega_0 with n = 2, m = 4
    auto F = maps::expression(2, {"x1^2 - x2^2", "2*x1*x2", "0", "1.5"});
    auto w = forms::hyperbolic_volume(2, 4);
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int t = 0; t < 50; ++t) {
      auto j = F.jet(std::vector<double>{u(rng), u(rng)});
      REQUIRE(qrc::star_pullback(j, w) == 0.0);
      REQUIRE(qrc::star_pullback(j, forms::volume(2, 4)) > 0.0);
    }
  }
  SECTION("affine maps reproduce the analytic minor formula exactly") {
    std::vector<double> A{1, 2, 0, -1, 3, 1, 0, 0, 2, 5, 1, 1};  // 4 x 3
    std::vector<double> b{1, 0, 0, 2};
    auto f = maps::affine(3, 4, A, b);
    auto w = forms::constant(AltTensor::dx(4, {1, 2, 4}) + 2.0 * AltTensor::dx(4, {2, 3, 4}));
    auto j = f.jet(std::vector<double>{0.3, 0.2, 0.1});
    auto det3 = [&](std::vector<int> rows) {
      std::vector<double> a;
      for (int r : rows)
        for (int c = 0; c < 3; ++c) a.push_back(A[r * 3 + c]);
      return oracle::leibniz_det(a, 3);
    };
    REQUIRE(qrc::star_pullback(j, w) == det3({0, 1, 3}) + 2.0 * det3({1, 2, 3}));
  }
  SECTION("products: star f^* omega = star f1^* omega1 + star f2^* omega2") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto f1 = maps::winding(3), f2 = maps::radial_stretch(2, 1.7);
    auto f = maps::product(f1, f2);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> x{u(rng), u(rng)};
      double lhs = qrc::star_pullback(f.jet(x), forms::product_volume(2));
      double rhs = qrc::star_pullback(f1.jet(x), forms::volume(2, 2)) + qrc::star_pullback(f2.jet(x), forms::volume(2, 2));
      REQUIRE(lhs == Approx(rhs).epsilon(1e-12));
    }
  }
  SECTION("potential pullbacks") {
    auto tau_form = forms::volume(2, 2);  // tau = (x dy - y dx) / 2
    auto j = maps::identity(2).jet(std::vector<double>{0.6, -0.4});
    AltTensor t = qrc::pullback_potential(j, tau_form);
    REQUIRE(t[0] == Approx(0.2));
    REQUIRE(t[1] == Approx(0.3));
    // z^2 at (1,0): tau o f = (1/2)(u dv - v du) with u = x^2 - y^2, v = 2xy
    auto j2 = maps::winding(2).jet(std::vector<double>{1.0, 0.0});
    AltTensor t2 = qrc::pullback_potential(j2, tau_form);
    auto fd = fd_of(maps::winding(2), {1.0, 0.0});
    double u0 = 1.0, v0 = 0.0;
    REQUIRE(t2[0] == Approx(0.5 * (u0 * fd[2] - v0 * fd[0])).margin(1e-8));
    REQUIRE(t2[1] == Approx(0.5 * (u0 * fd[3] - v0 * fd[1])).margin(1e-8));
    REQUIRE(t2[1] == Approx(1.0));
    REQUIRE(t2[0] == Approx(0.0).margin(1e-15));
    auto jc = maps::constant(2, {1.0, 2.0}).jet(std::vector<double>{0.1, 0.1});
    REQUIRE(qrc::pullback_potential(jc, tau_form).is_zero());
  }
  SECTION("degree mismatch") {
    auto j = maps::winding(2).jet(std::vector<double>{1.0, 0.0});
    REQUIRE_THROWS_AS(qrc::star_pullback(j, forms::volume(3, 3)), std::invalid_argument);
    REQUIRE_THROWS_AS(qrc::star_pullback(j, forms::simple(2, {1})), std::invalid_argument);
  }
}

TEST_CASE("jet CSV dump", "[map]") {
  std::vector<qrc::Jet> js{maps::winding(2).jet(std::vector<double>{1.0, 0.0})};
  std::ostringstream os;
  qrc::write_jets_csv(os, js);
  REQUIRE(os.str() == "x1,x2,f1,f2,D1_1,D1_2,D2_1,D2_2\n1,0,1,0,2,0,0,2\n");
}
