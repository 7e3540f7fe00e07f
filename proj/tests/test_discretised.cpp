#include <doctest.h>

#include <cmath>

#include "bfn/discretised.hpp"
#include "bfn/oracle.hpp"

using namespace bfn;

TEST_SUITE("discretised") {
  TEST_CASE("bin geometry") {
    const discretised::BinGeometry g(256);
    CHECK(g.center(109) == -0.14453125);
    CHECK(g.center(0) == 1.0 / 256 - 1.0);
    CHECK(g.center(255) == 1.0 - 1.0 / 256);
    CHECK(g.left(0) == -1.0);
    CHECK(g.right(255) == 1.0);
    const discretised::BinGeometry h(16);
    CHECK(h.width() == 0.125);
    CHECK(h.center(7) == -0.0625);
    CHECK_THROWS_AS(discretised::BinGeometry(1), DomainError);
  }

  TEST_CASE("quantise") {
    const Vec x{-1.0, 1.0, 0.0, -0.14, 0.5};
    const auto q = discretised::quantise(x, 16);
    CHECK(q.index == std::vector<int>{0, 15, 8, 6, 12});
    CHECK(q.centers[2] == 0.0625);
    const Vec bad{1.01};
    CHECK_THROWS_AS(discretised::quantise(bad, 16), DomainError);
  }

  TEST_CASE("clipped cdf") {
    for (double mu : {-3.0, 0.0, 0.4})
      for (double s : {0.01, 1.0, 5.0}) {
        CHECK(discretised::discretised_cdf(mu, s, -1.0) == 0.0);
        CHECK(discretised::discretised_cdf(mu, s, 1.0) == 1.0);
        CHECK(discretised::discretised_cdf(mu, s, -1.5) == 0.0);
      }
    CHECK(discretised::discretised_cdf(0.0, 1.0, 0.0) == 0.5);
  }

  TEST_CASE("bin masses sum to one and fold tails into the end bins") {
    for (int K : {2, 16, 256})
      for (double mu : {-4.0, -0.3, 0.0, 0.999, 6.0})
        for (double s : {1e-4, 0.05, 1.0, 30.0}) {
          const Vec m = discretised::bin_masses(mu, s, K);
          double sum = 0;
          for (double v : m) {
            CHECK(v >= 0.0);
            sum += v;
          }
          CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    const Vec m = discretised::bin_masses(0.0, 1.0, 16);
    CHECK(m[0] == doctest::Approx(normal_cdf(-0.875)).epsilon(1e-12));
    const Vec point = discretised::bin_masses(0.3, 0.0, 16);
    CHECK(point[10] == 1.0);
  }

  TEST_CASE("output before t_min is the standard normal histogram") {
    discretised::Config cfg;
    cfg.bins = 16;
    const Vec mu{0.3};
    const auto out = discretised::output_from_network(cfg, mu, cfg.t_min / 2, {});
    const Vec ref = discretised::bin_masses(0.0, 1.0, 16);
    for (int k = 0; k < 16; ++k) CHECK(out.at(0, k) == ref[k]);
    CHECK(out.max_row_error() < 1e-12);
  }

  TEST_CASE("k_hat is the expected centre") {
    Categorical c(1, 2);
    c.probs = {0.25, 0.75};
    CHECK(discretised::k_hat(c)[0] == doctest::Approx(0.25 * -0.5 + 0.75 * 0.5));
  }

  TEST_CASE("mixture log ratio vanishes on a point mass at the datum") {
    Categorical c(1, 16);
    c.probs[3] = 1.0;
    const double x = discretised::BinGeometry(16).center(3);
    Rng rng(1);
    for (int i = 0; i < 50; ++i)
      CHECK(discretised::mixture_log_ratio(rng, c, std::span<const double>(&x, 1), 7.0) == 0.0);
    CHECK_THROWS_AS(discretised::mixture_log_ratio(rng, c, std::span<const double>(&x, 1), 0.0), DomainError);
  }

  TEST_CASE("datum oracle gives zero loss and reproduces the datum") {
    discretised::Config cfg;
    cfg.bins = 16;
    cfg.sigma1 = std::sqrt(0.001);
    const discretised::BinGeometry g(16);
    const Vec x{g.center(4)};
    const auto oracle = discretised::single_datum_oracle(cfg, x);
    Rng rng(3);
    CHECK(discretised::loss_n_step(rng, *oracle, cfg, x, 8, 1) > 0.0);
    for (int i = 0; i < 100; ++i) {
      CHECK(std::abs(discretised::loss_n_step(rng, *oracle, cfg, x, 8, 2 + i % 7)) < 1e-9);
      CHECK(std::abs(discretised::loss_cts_time(rng, *oracle, cfg, x)) < 1e-9);
    }
    CHECK(discretised::generate(rng, *oracle, cfg, 10)[0] == x[0]);
  }
}
