#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bfn/categorical.hpp"
#include "bfn/numerics.hpp"

using namespace bfn;

TEST_SUITE("numerics") {
  TEST_CASE("rng is reproducible and splits independently") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    CHECK(a.draws() == 100);

    const Rng base(7);
    Rng s1 = base.split(1), s1b = base.split(1), s2 = base.split(2);
    CHECK(s1() == s1b());
    CHECK(s1() != s2());
    CHECK(base.draws() == 0);

    Rng r(3);
    r();
    r();
    Rng back = Rng::from_state(r.state(), r.draws());
    CHECK(back == r);
    CHECK(back() == r());
  }

  TEST_CASE("uniform draws stay in range") {
    Rng r(1);
    for (int i = 0; i < 10000; ++i) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      const double v = r.uniform_open();
      CHECK(v > 0.0);
      CHECK(r.uniform_index(7) < 7u);
    }
  }

  TEST_CASE("rng works with standard distributions") {
    Rng r(5);
    std::uniform_int_distribution<int> d(0, 3);
    for (int i = 0; i < 100; ++i) {
      const int v = d(r);
      CHECK((v >= 0 && v <= 3));
    }
  }

  TEST_CASE("normal draws have unit moments") {
    Rng r(11);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double z = r.normal();
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.01);
  }

  TEST_CASE("erf matches reference values") {
    CHECK(bfn::erf(0.0) == 0.0);
    CHECK(bfn::erf(0.5) == doctest::Approx(0.5204998778130465).epsilon(1e-15));
    CHECK(bfn::erf(1.0) == doctest::Approx(0.8427007929497149).epsilon(1e-15));
    CHECK(bfn::erf(-2.5) == doctest::Approx(-0.9995930479825550).epsilon(1e-15));
    CHECK(bfn::erfc(3.0) == doctest::Approx(2.209049699858544e-05).epsilon(1e-13));
    CHECK(bfn::erfc(6.0) == doctest::Approx(2.151973671249892e-17).epsilon(1e-12));
    for (double x = -6; x <= 6; x += 0.37) CHECK(std::abs(bfn::erf(x) - std::erf(x)) < 1e-15);
  }

  TEST_CASE("normal cdf is symmetric") {
    CHECK(normal_cdf(0.0) == 0.5);
    for (double z : {0.1, 1.0, 2.5, 7.0}) CHECK(normal_cdf(z) + normal_cdf(-z) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
  }

  TEST_CASE("softmax and log_sum_exp are stable") {
    const Vec big{1000.0, 1000.0, 999.0};
    const Vec p = softmax(big);
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p[0] == doctest::Approx(p[1]));
    const double inf = std::numeric_limits<double>::infinity();
    const Vec terms{-inf, std::log(2.0), std::log(3.0)};
    CHECK(log_sum_exp(terms) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
    const Vec none{-inf, -inf};
    CHECK(log_sum_exp(none) == -inf);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(0.0) == 0.5);
  }

  TEST_CASE("log gaussian density") {
    CHECK(log_gaussian_pdf(0.0, 0.0, 1.0) == doctest::Approx(-0.5 * std::log(2 * M_PI)));
    const Vec y{1.0, 2.0}, m{0.0, 0.0};
    CHECK(log_gaussian_pdf(y, m, 2.0) ==
          doctest::Approx(log_gaussian_pdf(1.0, 0.0, 2.0) + log_gaussian_pdf(2.0, 0.0, 2.0)));
  }

  TEST_CASE("gaussian_sample rejects bad variance") {
    Rng r(0);
    const Vec m{0.0};
    CHECK_THROWS_AS(gaussian_sample(r, m, -1.0), DomainError);
  }

  TEST_CASE("categorical helpers") {
    const auto u = Categorical::uniform(3, 4);
    CHECK(u.max_row_error() < 1e-15);
    CHECK(u.at(2, 3) == 0.25);
    Rng r(9);
    const Vec row{0.0, 1.0, 0.0};
    for (int i = 0; i < 20; ++i) CHECK(sample_index(r, row) == 1);
    CHECK(floored_log(0.0) == kLogFloor);
  }
}
