#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "qrc/exterior.hpp"
#include "test_util.hpp"

using Catch::Approx;
using qrc::AltTensor;
using qrc::MultiIndex;

TEST_CASE("multi-index basis enumeration", "[exterior]") {
  SECTION("lexicographic order matches C(m,k) and the subset oracle") {
    for (int m = 0; m <= 8; ++m)
      for (int k = 0; k <= m; ++k) {
        const auto& masks = qrc::basis_masks(m, k);
        REQUIRE(masks.size() == qrc::binomial(m, k));
        auto subs = oracle::subsets(m, k);
        for (std::size_t i = 0; i < masks.size(); ++i) {
          qrc::Mask expect = 0;
          for (int a : subs[i]) expect |= qrc::Mask{1} << a;
          REQUIRE(masks[i] == expect);
          REQUIRE(qrc::basis_rank(m, masks[i]) == static_cast<int>(i));
        }
      }
    REQUIRE(qrc::basis_masks(12, 6).size() == 924);
  }
  SECTION("invalid multi-indices are rejected") {
    REQUIRE_THROWS_AS(MultiIndex(3, {2, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(MultiIndex(3, {1, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(MultiIndex(3, {0, 2}), std::invalid_argument);
    REQUIRE_THROWS_AS(MultiIndex(3, {1, 4}), std::invalid_argument);
    REQUIRE_THROWS_AS(AltTensor(13, 1), std::invalid_argument);
  }
  REQUIRE(MultiIndex(4, {1, 3}).to_string() == "(1,3)");
  REQUIRE(MultiIndex(4, {2, 3}).rank() == 3);
}

TEST_CASE("wedge product", "[exterior][wedge]") {
  SECTION("dx1 ^ dx2 in R^3") {
    AltTensor w = qrc::wedge(AltTensor::dx(3, {1}), AltTensor::dx(3, {2}));
    REQUIRE(w == AltTensor::dx(3, {1, 2}));
  }
  SECTION("(dx12 + dx34)^2 = 2 dx1234, checked against the shuffle oracle") {
    AltTensor a = AltTensor::dx(4, {1, 2}) + AltTensor::dx(4, {3, 4});
    AltTensor w = qrc::wedge(a, a);
    auto oracle_coeffs = oracle::wedge_by_shuffles(4, 2, testutil::coeff_vector(a), 2, testutil::coeff_vector(a));
    REQUIRE(oracle_coeffs.size() == 1);
    REQUIRE(oracle_coeffs[0] == Approx(2.0));
    REQUIRE(w == 2.0 * AltTensor::dx(4, {1, 2, 3, 4}));
  }
  SECTION("dx1 ^ dx1 = 0") { REQUIRE(qrc::wedge(AltTensor::dx(3, {1}), AltTensor::dx(3, {1})).is_zero()); }
  SECTION("random tensors agree with the shuffle oracle") {
    std::mt19937_64 rng(11);
    for (int m = 2; m <= 5; ++m)
      for (int p = 0; p <= m; ++p)
        for (int q = 0; p + q <= m; ++q) {
          AltTensor a = testutil::random_tensor(rng, m, p);
          AltTensor b = testutil::random_tensor(rng, m, q);
          auto expect = oracle::wedge_by_shuffles(m, p, testutil::coeff_vector(a), q, testutil::coeff_vector(b));
          AltTensor w = qrc::wedge(a, b);
          for (std::size_t i = 0; i < expect.size(); ++i) REQUIRE(w[i] == Approx(expect[i]).margin(1e-12));
        }
  }
  SECTION("graded anticommutativity and associativity") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      int m = 6;
      int p = trial % 3 + 1, q = (trial / 3) % 2 + 1, r = 1;
      AltTensor a = testutil::random_tensor(rng, m, p);
      AltTensor b = testutil::random_tensor(rng, m, q);
      AltTensor c = testutil::random_tensor(rng, m, r);
      AltTensor ab = qrc::wedge(a, b);
      AltTensor ba = qrc::wedge(b, a);
      double s = ((p * q) & 1) ? -1.0 : 1.0;
      REQUIRE((ba - s * ab).max_abs() < 1e-12);
      REQUIRE((qrc::wedge(ab, c) - qrc::wedge(a, qrc::wedge(b, c))).max_abs() < 1e-12);
    }
  }
  SECTION("errors") {
    REQUIRE_THROWS_AS(qrc::wedge(AltTensor::dx(3, {1}), AltTensor::dx(4, {1})), std::invalid_argument);
    REQUIRE_THROWS_AS(qrc::wedge(AltTensor::dx(3, {1, 2}), AltTensor::dx(3, {1, 3})), std::logic_error);
  }
}

TEST_CASE("Hodge star", "[exterior][hodge]") {
  SECTION("*dx = dy in R^2") { REQUIRE(qrc::hodge_star(AltTensor::dx(2, {1})) == AltTensor::dx(2, {2})); }
  SECTION("*dt = dx ^ dy in R^3 and the Heisenberg contact form") {
    REQUIRE(qrc::hodge_star(AltTensor::dx(3, {3})) == AltTensor::dx(3, {1, 2}));
    // theta_H = dt - (x dy - y dx)/2 at (x, y) = (0.8, -1.4)
    double xv = 0.8, yv = -1.4;
    AltTensor theta(3, 1, {0.5 * yv, -0.5 * xv, 1.0});
    AltTensor star = qrc::hodge_star(theta);
    // dx^dy - x/2 dt^dx + y/2 dy^dt = dx^dy + x/2 dx^dt + y/2 dy^dt
    REQUIRE(star[0] == Approx(1.0));
    REQUIRE(star[1] == Approx(0.5 * xv));
    REQUIRE(star[2] == Approx(0.5 * yv));
  }
  SECTION("dx_I ^ *dx_I is the volume form for every basis element") {
    for (int m = 1; m <= 6; ++m)
      for (int k = 0; k <= m; ++k)
        for (qrc::Mask mask : qrc::basis_masks(m, k)) {
          AltTensor e = AltTensor::basis(MultiIndex::from_mask(m, mask));
          AltTensor vol = qrc::wedge(e, qrc::hodge_star(e));
          REQUIRE(vol.size() == 1);
          REQUIRE(vol[0] == 1.0);
        }
  }
  SECTION("** = (-1)^{k(m-k)} on random tensors, all k <= m <= 6") {
    std::mt19937_64 rng(13);
    for (int m = 1; m <= 6; ++m)
      for (int k = 0; k <= m; ++k) {
        AltTensor a = testutil::random_tensor(rng, m, k);
        double s = ((k * (m - k)) & 1) ? -1.0 : 1.0;
        REQUIRE(qrc::hodge_star(qrc::hodge_star(a)) == s * a);
      }
  }
}

TEST_CASE("interior product", "[exterior][interior]") {
  std::vector<double> e1{1, 0, 0, 0}, e2{0, 1, 0, 0}, e3{0, 0, 1, 0};
  SECTION("basis examples") {
    REQUIRE(qrc::interior_product(e1, AltTensor::dx(4, {1, 2})) == AltTensor::dx(4, {2}));
    REQUIRE(qrc::interior_product(e2, AltTensor::dx(4, {1, 2})) == -AltTensor::dx(4, {1}));
    AltTensor a = AltTensor::dx(4, {1, 2}) + AltTensor::dx(4, {3, 4});
    REQUIRE(qrc::interior_product(e3, a) == AltTensor::dx(4, {4}));
  }
  SECTION("agrees with direct evaluation on basis (k-1)-tuples") {
    std::mt19937_64 rng(14);
    for (int m = 2; m <= 5; ++m)
      for (int k = 1; k <= m; ++k) {
        AltTensor a = testutil::random_tensor(rng, m, k);
        auto v = testutil::random_vector(rng, m);
        AltTensor c = qrc::interior_product(v, a);
        auto subs = oracle::subsets(m, k - 1);
        for (std::size_t s = 0; s < subs.size(); ++s) {
          std::vector<std::vector<double>> vs{v};
          for (int axis : subs[s]) {
            std::vector<double> e(m, 0.0);
            e[axis] = 1.0;
            vs.push_back(e);
          }
          REQUIRE(c[s] == Approx(oracle::eval_form(m, k, testutil::coeff_vector(a), vs)).margin(1e-12));
        }
      }
  }
  SECTION("antiderivation law") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 60; ++trial) {
      int m = 5 + trial % 2;
      int p = 1 + trial % 3, q = 1 + (trial / 3) % 2;
      AltTensor a = testutil::random_tensor(rng, m, p);
      AltTensor b = testutil::random_tensor(rng, m, q);
      auto v = testutil::random_vector(rng, m);
      AltTensor lhs = qrc::interior_product(v, qrc::wedge(a, b));
      double s = (p & 1) ? -1.0 : 1.0;
      AltTensor rhs = qrc::wedge(qrc::interior_product(v, a), b) + s * qrc::wedge(a, qrc::interior_product(v, b));
      REQUIRE((lhs - rhs).max_abs() < 1e-12);
    }
  }
  SECTION("degree-0 input is rejected") {
    REQUIRE_THROWS_AS(qrc::interior_product(e1, AltTensor::scalar(4, 2.0)), std::invalid_argument);
  }
}

TEST_CASE("evaluation on frames", "[exterior]") {
  std::mt19937_64 rng(16);
  for (int k = 1; k <= 4; ++k) {
    AltTensor a = testutil::random_tensor(rng, 5, k);
    auto frame = oracle::random_frame(rng, 5, k);
    std::vector<double> flat;
    for (const auto& v : frame) flat.insert(flat.end(), v.begin(), v.end());
    REQUIRE(qrc::evaluate(a, flat) == Approx(oracle::eval_form(5, k, testutil::coeff_vector(a), frame)).margin(1e-12));
  }
}

TEST_CASE("simplicity", "[exterior][simple]") {
  SECTION("every 2-form in R^3 is simple") {
    REQUIRE(qrc::is_simple(AltTensor::dx(3, {1, 2}) + AltTensor::dx(3, {1, 3})));
  }
  SECTION("dx12 + dx34 is not simple") {
    REQUIRE_FALSE(qrc::is_simple(AltTensor::dx(4, {1, 2}) + AltTensor::dx(4, {3, 4})));
  }
  SECTION("1-forms are simple") {
    std::mt19937_64 rng(17);
    REQUIRE(qrc::is_simple(testutil::random_tensor(rng, 6, 1)));
  }
  SECTION("wedges of random 1-forms are simple; generic forms of middle degree are not") {
    std::mt19937_64 rng(18);
    for (int k = 2; k <= 4; ++k) {
      AltTensor w = testutil::random_tensor(rng, 7, 1);
      for (int i = 1; i < k; ++i) w = qrc::wedge(w, testutil::random_tensor(rng, 7, 1));
      REQUIRE(qrc::is_simple(w));
      REQUIRE_FALSE(qrc::is_simple(testutil::random_tensor(rng, 7, k)));
    }
  }
  SECTION("odd degree: e123 + e456 is not simple although a ^ a = 0") {
    AltTensor a = AltTensor::dx(6, {1, 2, 3}) + AltTensor::dx(6, {4, 5, 6});
    REQUIRE(qrc::wedge(a, a).is_zero());
    REQUIRE_FALSE(qrc::is_simple(a));
  }
}
