#include <doctest.h>

#include <cmath>

#include "bfn/discrete.hpp"
#include "bfn/oracle.hpp"

using namespace bfn;

TEST_SUITE("discrete") {
  TEST_CASE("sender mean and one-hot layout") {
    const std::vector<int> x{2, 0};
    CHECK(discrete::one_hot(x, 3) == Vec{0, 0, 1, 1, 0, 0});
    CHECK(discrete::sender_mean(x, 0.5, 3) == Vec{-0.5, -0.5, 1.0, 1.0, -0.5, -0.5});
    Rng rng(0);
    CHECK_THROWS_AS(discrete::sender_sample(rng, x, 0.0, 3), DomainError);
  }

  TEST_CASE("bayes update is a multiplicative reweighting") {
    Categorical p(1, 3);
    p.probs = {0.2, 0.3, 0.5};
    const Vec y{std::log(2.0), 0.0, std::log(0.5)};
    const auto q = discrete::bayes_update(p, y);
    const double z = 0.4 + 0.3 + 0.25;
    CHECK(q.probs[0] == doctest::Approx(0.4 / z).epsilon(1e-15));
    CHECK(q.probs[2] == doctest::Approx(0.25 / z).epsilon(1e-15));
    const Vec huge{800.0, 0.0, -800.0};
    const auto r = discrete::bayes_update(p, huge);
    CHECK(r.probs[0] == 1.0);
    CHECK(r.max_row_error() < 1e-15);
  }

  TEST_CASE("two updates equal one with the summed observation") {
    Rng rng(12);
    for (int c = 0; c < 100; ++c) {
      const auto theta = discrete::prior(2, 4);
      Vec a(8), b(8), ab(8);
      for (int j = 0; j < 8; ++j) {
        a[j] = 3 * rng.normal();
        b[j] = 3 * rng.normal();
        ab[j] = a[j] + b[j];
      }
      const auto two = discrete::bayes_update(discrete::bayes_update(theta, a), b);
      const auto one = discrete::bayes_update(theta, ab);
      for (int j = 0; j < 8; ++j) CHECK(std::abs(two.probs[j] - one.probs[j]) < 1e-12);
    }
  }

  TEST_CASE("flow at t = 0 is uniform and draws nothing") {
    discrete::Config cfg;
    cfg.classes = 5;
    Rng rng(1);
    const Rng before = rng;
    const std::vector<int> x{4};
    const auto p = discrete::flow_sample(rng, cfg, x, 0.0);
    for (double v : p.probs) CHECK(v == 0.2);
    CHECK(rng == before);
  }

  TEST_CASE("binary head uses a sigmoid for class 0") {
    const Vec net{1.3, -40.0};
    const auto out = discrete::output_from_logits(net, 2, 2);
    CHECK(out.at(0, 0) == doctest::Approx(sigmoid(1.3)).epsilon(1e-15));
    CHECK(out.at(1, 1) == doctest::Approx(1.0 - sigmoid(-40.0)).epsilon(1e-15));
    Categorical p(1, 2);
    p.probs = {0.75, 0.25};
    CHECK(discrete::network_input(p) == Vec{0.5});
    Categorical q(1, 3);
    q.probs = {0.5, 0.25, 0.25};
    CHECK(discrete::network_input(q) == Vec{0.0, -0.5, -0.5});
  }

  TEST_CASE("e_hat and the continuous-time loss") {
    discrete::Config cfg;
    cfg.classes = 3;
    cfg.beta1 = 3.0;
    const std::vector<int> x{1};
    const Vec logits{0.0, 0.0, 0.0};
    const auto lg = discrete::cts_time_loss_from_output(cfg, x, 0.5, logits);
    // K beta1 t ||e_x - 1/3||^2
    CHECK(lg.loss == doctest::Approx(3 * 3.0 * 0.5 * (4.0 / 9 + 1.0 / 9 + 1.0 / 9)));
  }

  TEST_CASE("datum oracle gives zero loss and the datum") {
    discrete::Config cfg;
    cfg.classes = 4;
    cfg.dim = 3;
    const std::vector<int> x{3, 0, 2};
    const auto oracle = discrete::single_datum_oracle(cfg, x);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      CHECK(std::abs(discrete::loss_n_step(rng, *oracle, cfg, x, 7)) < 1e-9);
      CHECK(std::abs(discrete::loss_cts_time(rng, *oracle, cfg, x)) < 1e-9);
    }
    CHECK(discrete::generate(rng, *oracle, cfg, 10) == x);
  }

  TEST_CASE("class indices are validated") {
    discrete::Config cfg;
    cfg.classes = 3;
    const ConstantPredictor zero(3, Vec{0.0, 0.0, 0.0});
    Rng rng(0);
    const std::vector<int> bad{3};
    CHECK_THROWS_AS(discrete::loss_cts_time(rng, zero, cfg, bad), DomainError);
  }
}
