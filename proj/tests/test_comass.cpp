#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qrc/comass.hpp"
#include "test_util.hpp"

using Catch::Approx;
using qrc::AltTensor;
using qrc::ComassMethod;

TEST_CASE("comass examples", "[comass]") {
  SECTION("unit simple covector") { REQUIRE(qrc::comass(AltTensor::dx(3, {1, 2})) == Approx(1.0)); }
  SECTION("standard symplectic form on R^4 has comass 1 and mass sqrt 2") {
    AltTensor w = AltTensor::dx(4, {1, 2}) + AltTensor::dx(4, {3, 4});
    REQUIRE(qrc::comass(w) == 1.0);
    REQUIRE(w.mass() == Approx(std::sqrt(2.0)));
  }
  SECTION("2 dx12 + dx34 has comass 2 (spectral pairs {2, 1})") {
    AltTensor w = 2.0 * AltTensor::dx(4, {1, 2}) + AltTensor::dx(4, {3, 4});
    REQUIRE(qrc::comass(w) == Approx(2.0).epsilon(1e-14));
    double sampled = oracle::sampled_comass(4, 2, testutil::coeff_vector(w), 20000);
    REQUIRE(sampled <= 2.0 + 1e-12);
    REQUIRE(sampled > 1.97);
  }
  SECTION("1-forms use the Euclidean norm") {
    REQUIRE(qrc::comass(AltTensor(3, 1, {3.0, 0.0, -4.0})) == Approx(5.0));
  }
  SECTION("degree 0 is rejected") { REQUIRE_THROWS_AS(qrc::comass(AltTensor::scalar(3, 1.0)), std::invalid_argument); }
  SECTION("forced methods validate their preconditions") {
    AltTensor w = AltTensor::dx(4, {1, 2}) + AltTensor::dx(4, {3, 4});
    REQUIRE_THROWS_AS(qrc::comass(w, ComassMethod::Simple), std::invalid_argument);
    REQUIRE_THROWS_AS(qrc::comass(AltTensor::dx(4, {1, 2, 3}), ComassMethod::Spectral), std::invalid_argument);
  }
}

TEST_CASE("spectral comass equals the Stiefel optimizer on random 2-forms", "[comass][optimizer]") {
  std::mt19937_64 rng(21);
  for (int m : {4, 6}) {
    for (int trial = 0; trial < 10; ++trial) {
      AltTensor a = testutil::random_tensor(rng, m, 2);
      double spectral = qrc::comass(a, ComassMethod::Spectral);
      qrc::ComassOptions opt;
      opt.method = ComassMethod::Optimize;
      opt.seed = static_cast<std::uint64_t>(trial);
      opt.restarts = 16;
      auto res = qrc::comass_report(a, opt);
      REQUIRE(res.heuristic);
      REQUIRE(res.restarts == 16);
      REQUIRE(res.value == Approx(spectral).margin(1e-6));
      REQUIRE(res.value <= spectral + 1e-12);
    }
  }
}

TEST_CASE("comass on higher degrees", "[comass][optimizer]") {
  SECTION("simple 3-form: optimizer recovers the mass") {
    std::mt19937_64 rng(22);
    AltTensor w = qrc::wedge(qrc::wedge(testutil::random_tensor(rng, 5, 1), testutil::random_tensor(rng, 5, 1)),
                             testutil::random_tensor(rng, 5, 1));
    auto auto_res = qrc::comass_report(w);
    REQUIRE(auto_res.method == ComassMethod::Simple);
    REQUIRE_FALSE(auto_res.heuristic);
    qrc::ComassOptions opt;
    opt.method = ComassMethod::Optimize;
    opt.restarts = 8;
    REQUIRE(qrc::comass_report(w, opt).value == Approx(w.mass()).epsilon(1e-9));
  }
  SECTION("e123 + e456 in R^6 has comass 1; auto flags the value as heuristic") {
    AltTensor a = AltTensor::dx(6, {1, 2, 3}) + AltTensor::dx(6, {4, 5, 6});
    auto res = qrc::comass_report(a);
    REQUIRE(res.heuristic);
    REQUIRE(res.method == ComassMethod::Optimize);
    REQUIRE(res.restarts == 64);
    REQUIRE(res.value == Approx(1.0).epsilon(1e-9));
    REQUIRE(oracle::sampled_comass(6, 3, testutil::coeff_vector(a), 3000) <= res.value + 1e-9);
  }
  SECTION("the omega ^ omega square of the symplectic form on R^6 (Wirtinger: comass 2)") {
    AltTensor w = AltTensor::dx(6, {1, 2}) + AltTensor::dx(6, {3, 4}) + AltTensor::dx(6, {5, 6});
    AltTensor w2 = qrc::wedge(w, w);
    REQUIRE(qrc::comass(w2) == Approx(2.0).epsilon(1e-8));
  }
  SECTION("same seed, same value") {
    std::mt19937_64 rng(23);
    AltTensor a = testutil::random_tensor(rng, 6, 3);
    REQUIRE(qrc::comass(a, ComassMethod::Auto, 5) == qrc::comass(a, ComassMethod::Auto, 5));
  }
}

TEST_CASE("comass-mass sandwich and norm axioms", "[comass][property]") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 40; ++trial) {
    int m = 4 + trial % 3;
    int k = 1 + trial % (m - 1);
    AltTensor a = testutil::random_tensor(rng, m, k);
    AltTensor b = testutil::random_tensor(rng, m, k);
    double ca = qrc::comass(a), cb = qrc::comass(b);
    double bound = std::sqrt(static_cast<double>(qrc::binomial(m, k)));
    REQUIRE(ca <= a.mass() + 1e-12);
    REQUIRE(a.mass() <= bound * ca + 1e-12);
    if (qrc::is_simple(a)) REQUIRE(ca == Approx(a.mass()).epsilon(1e-9));
    REQUIRE(qrc::comass(a + b) <= ca + cb + 1e-6);
    REQUIRE(qrc::comass(-2.5 * a) == Approx(2.5 * ca).epsilon(1e-6));
  }
}
