#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "bfn/numerics.hpp"
#include "bfn/schedule.hpp"

using namespace bfn;

TEST_SUITE("schedule") {
  TEST_CASE("continuous schedule closed forms") {
    const auto s = AccuracySchedule::continuous_sigma(0.02);
    CHECK(s.beta(0.0) == 0.0);
    CHECK(s.beta(1.0) == doctest::Approx(1.0 / (0.02 * 0.02) - 1.0).epsilon(1e-14));
    CHECK(s.gamma(1.0) == doctest::Approx(1.0 - 0.02 * 0.02).epsilon(1e-15));
    CHECK(s.gamma(0.3) == doctest::Approx(s.beta(0.3) / (1.0 + s.beta(0.3))).epsilon(1e-14));
    CHECK(s.alpha(0.5) == doctest::Approx(-2.0 * std::log(0.02) / 0.02).epsilon(1e-14));
    CHECK(s.parameter() == 0.02);
  }

  TEST_CASE("discrete schedule closed forms") {
    const auto s = AccuracySchedule::discrete_quadratic(3.0);
    CHECK(s.beta(0.5) == 0.75);
    CHECK(s.alpha(0.5) == 3.0);
    CHECK(s.step_alpha(1, 4) == doctest::Approx(3.0 / 16.0));
    CHECK(s.step_alpha(4, 4) == doctest::Approx(3.0 * 7.0 / 16.0));
  }

  TEST_CASE("step accuracies telescope to beta(1)") {
    for (const auto& s : {AccuracySchedule::continuous_sigma(0.001), AccuracySchedule::discrete_quadratic(0.75)})
      for (int n : {1, 3, 100}) {
        double sum = 0.0;
        for (int i = 1; i <= n; ++i) sum += s.step_alpha(i, n);
        CHECK(sum == doctest::Approx(s.beta(1.0)).epsilon(1e-12));
      }
  }

  TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(AccuracySchedule::continuous_sigma(0.0), DomainError);
    CHECK_THROWS_AS(AccuracySchedule::continuous_sigma(1.0), DomainError);
    CHECK_THROWS_AS(AccuracySchedule::discrete_quadratic(-1.0), DomainError);
    const auto s = AccuracySchedule::discrete_quadratic(3.0);
    CHECK_THROWS_AS(s.beta(1.5), DomainError);
    CHECK_THROWS_AS(s.step_alpha(0, 4), DomainError);
    CHECK_THROWS(s.gamma(0.5));
  }

  TEST_CASE("presets") {
    CHECK(presets::kSigma1Bins256 == 0.001);
    CHECK(presets::kSigma1Bins16 == std::sqrt(0.001));
    CHECK(presets::kBeta1Binary == 3.0);
    CHECK(presets::kBeta1Text == 0.75);
  }
}
