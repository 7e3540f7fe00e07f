#include <doctest.h>

#include <cmath>

#include "bfn/continuous.hpp"
#include "bfn/oracle.hpp"

using namespace bfn;

TEST_SUITE("continuous") {
  TEST_CASE("bayes update by hand") {
    const continuous::Params p{{0.5}, 2.0};
    const Vec y{1.5};
    const auto q = continuous::bayes_update(p, y, 3.0);
    CHECK(q.precision == 5.0);
    CHECK(q.mean[0] == doctest::Approx((0.5 * 2.0 + 1.5 * 3.0) / 5.0).epsilon(1e-15));
  }

  TEST_CASE("bayes update contracts") {
    const auto p = continuous::Params::prior(2);
    const Vec y{0.0, 0.0}, short_y{0.0};
    CHECK_THROWS_AS(continuous::bayes_update(p, y, 0.0), DomainError);
    CHECK_THROWS_AS(continuous::bayes_update(p, y, -1.0), DomainError);
    CHECK_THROWS_AS(continuous::bayes_update(p, short_y, 1.0), ContractError);
  }

  TEST_CASE("flow sample at t = 0 is the prior and draws nothing") {
    continuous::Config cfg;
    cfg.dim = 2;
    Rng rng(4);
    const Rng before = rng;
    const Vec x{0.3, -0.2};
    const auto p = continuous::flow_sample(rng, cfg, x, 0.0);
    CHECK(p.precision == 1.0);
    CHECK(p.mean == Vec{0.0, 0.0});
    CHECK(rng == before);
  }

  TEST_CASE("flow sample moments") {
    continuous::Config cfg;
    cfg.sigma1 = 0.02;
    const Vec x{0.6};
    const double t = 0.4, g = cfg.schedule().gamma(t);
    Rng rng(8);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const auto p = continuous::flow_sample(rng, cfg, x, t);
      CHECK(p.precision == doctest::Approx(1.0 + cfg.schedule().beta(t)));
      s += p.mean[0];
      s2 += p.mean[0] * p.mean[0];
    }
    const double m = s / n, v = s2 / n - m * m;
    CHECK(m == doctest::Approx(g * 0.6).epsilon(0.01));
    CHECK(v == doctest::Approx(g * (1 - g)).epsilon(0.02));
  }

  TEST_CASE("epsilon inversion recovers the datum") {
    continuous::Config cfg;
    const double t = 0.7, g = cfg.schedule().gamma(t);
    const Vec x{0.25, -0.8};
    const Vec z{0.3, -1.1};
    Vec mu(2), eps(2);
    for (int d = 0; d < 2; ++d) {
      mu[d] = g * x[d] + std::sqrt(g * (1 - g)) * z[d];
      eps[d] = (mu[d] - g * x[d]) / std::sqrt(g * (1 - g));
    }
    const Vec xh = continuous::x_hat_from_epsilon(cfg, mu, t, eps);
    CHECK(xh[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(xh[1] == doctest::Approx(-0.8).epsilon(1e-9));
  }

  TEST_CASE("prediction is clipped and zero before t_min") {
    continuous::Config cfg;
    const Vec mu{0.5};
    const Vec huge{-1e6};
    CHECK(continuous::x_hat_from_epsilon(cfg, mu, 0.5, huge)[0] == 1.0);
    const ConstantPredictor pred(1, Vec{5.0});
    const continuous::Params p{{0.1}, 1.0};
    CHECK(continuous::output_prediction(pred, cfg, p, cfg.t_min / 2)[0] == 0.0);
  }

  TEST_CASE("perfect predictor has zero loss") {
    continuous::Config cfg;
    cfg.dim = 2;
    const Vec x{0.4, -0.3};
    const auto oracle = continuous::single_datum_oracle(cfg, x);
    Rng rng(2);
    // step 1 starts at t = 0 where the network is not consulted
    CHECK(continuous::loss_n_step(rng, *oracle, cfg, x, 10, 1) > 0.0);
    for (int i = 0; i < 200; ++i) {
      CHECK(std::abs(continuous::loss_n_step(rng, *oracle, cfg, x, 10, 2 + i % 9)) < 1e-9);
      CHECK(std::abs(continuous::loss_cts_time(rng, *oracle, cfg, x)) < 1e-9);
    }
  }

  TEST_CASE("continuous-time loss formula") {
    continuous::Config cfg;
    cfg.sigma1 = 0.02;
    const Vec x{0.5};
    const ConstantPredictor zero(1, Vec{0.0});
    // eps_hat = 0 means x_hat = mu / gamma
    const Vec mu{0.3};
    const double t = 0.6, g = cfg.schedule().gamma(t);
    const Vec eps{0.0};
    const auto lg = continuous::cts_time_loss_from_output(cfg, x, mu, t, eps);
    const double xh = std::clamp(0.3 / g, -1.0, 1.0);
    CHECK(lg.loss == doctest::Approx(-std::log(0.02) * std::pow(0.02, -2 * t) * (0.5 - xh) * (0.5 - xh)));
  }

  TEST_CASE("generate with the datum oracle returns the datum") {
    continuous::Config cfg;
    const Vec x{0.1};
    const auto oracle = continuous::single_datum_oracle(cfg, x);
    Rng rng(0);
    const auto gen = continuous::generate_with_params(rng, *oracle, cfg, 20);
    CHECK(gen.sample[0] == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(gen.final_params.precision == doctest::Approx(1.0 + cfg.schedule().beta(1.0)));
    CHECK_THROWS_AS(continuous::generate(rng, *oracle, cfg, 0), DomainError);
  }

  TEST_CASE("data outside the range is rejected") {
    continuous::Config cfg;
    const ConstantPredictor zero(1, Vec{0.0});
    Rng rng(0);
    const Vec bad{1.5};
    CHECK_THROWS_AS(continuous::loss_cts_time(rng, zero, cfg, bad), DomainError);
  }
}
