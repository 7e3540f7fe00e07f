#include <doctest.h>

#include <cmath>

#include "bfn/harness.hpp"
#include "bfn/mlp.hpp"
#include "bfn/model.hpp"
#include "bfn/oracle.hpp"

using namespace bfn;

namespace {

PredictorSpec small_spec(Modality m, std::size_t dim, int classes) {
  PredictorSpec s;
  s.modality = m;
  s.dim = dim;
  s.classes = classes;
  s.hidden = {8, 8};
  s.time.fourier_pairs = 2;
  return s;
}

}  // namespace

TEST_SUITE("predictor") {
  TEST_CASE("widths follow the modality") {
    CHECK(modality_input_width(Modality::continuous, 3, 0) == 3);
    CHECK(modality_output_width(Modality::continuous, 3, 0) == 3);
    CHECK(modality_output_width(Modality::discretised, 3, 16) == 6);
    CHECK(modality_input_width(Modality::discrete, 3, 4) == 12);
    CHECK(modality_input_width(Modality::discrete, 3, 2) == 3);
    CHECK(modality_output_width(Modality::discrete, 3, 2) == 3);
    CHECK(modality_from_string("discretised") == Modality::discretised);
    CHECK_THROWS(modality_from_string("pixels"));
  }

  TEST_CASE("time features") {
    TimeFeatures raw{0};
    CHECK(raw.width() == 1);
    TimeFeatures f{3};
    CHECK(f.width() == 6);
    Vec out(6);
    f.encode(0.25, out);
    CHECK(out[0] == doctest::Approx(std::sin(M_PI * 0.25)));
    CHECK(out[1] == doctest::Approx(std::cos(M_PI * 0.25)));
  }

  TEST_CASE("mlp shapes and contracts") {
    Rng rng(0);
    const Mlp net = Mlp::initialised(small_spec(Modality::discrete, 2, 3), rng);
    CHECK(net.input_width() == 6);
    CHECK(net.output_width() == 6);
    CHECK(net.layers().size() == 3);
    CHECK(net.param_count() == net.layers().back().end());
    const Vec in(6, 0.1);
    CHECK(net.forward(in, 0.5).size() == 6);
    const Vec bad(5, 0.0);
    CHECK_THROWS_AS(net.forward(bad, 0.5), ContractError);
    Mlp copy = net;
    CHECK_THROWS_AS(copy.set_params(Vec(3)), ContractError);
    Mlp::Tape empty;
    CHECK_THROWS_AS(net.backward(empty, Vec(6)), ContractError);
  }

  TEST_CASE("mlp backward matches finite differences") {
    for (auto act : {Activation::tanh, Activation::silu}) {
      auto spec = small_spec(Modality::continuous, 3, 0);
      spec.activation = act;
      Rng rng(5);
      Mlp net = Mlp::initialised(spec, rng, 1.0);
      const Vec in{0.2, -0.4, 0.9};
      const Vec up{0.7, -1.2, 0.3};
      Mlp::Tape tape;
      net.forward(in, 0.3, tape);
      const Vec grad = net.backward(tape, up);
      auto f = [&](const Vec& p) {
        Mlp probe = net;
        probe.set_params(p);
        const Vec o = probe.forward(in, 0.3);
        return o[0] * up[0] + o[1] * up[1] + o[2] * up[2];
      };
      Vec p = net.params();
      for (std::size_t k = 0; k < p.size(); k += 7) {
        const double orig = p[k];
        p[k] = orig + 1e-6;
        const double a = f(p);
        p[k] = orig - 1e-6;
        const double b = f(p);
        p[k] = orig;
        CHECK(grad[k] == doctest::Approx((a - b) / 2e-6).epsilon(1e-6).scale(1.0));
      }
    }
  }

  TEST_CASE("loss gradients check for every head") {
    for (auto m : {Modality::continuous, Modality::discretised, Modality::discrete}) {
      const auto r = harness::check_gradients(m, 3, 20);
      INFO(r.line());
      CHECK(r.pass);
    }
  }

  TEST_CASE("constant predictor and checked_forward") {
    const ConstantPredictor c(2, Vec{1.0, 2.0, 3.0});
    const Vec in{0.0, 0.0};
    CHECK(checked_forward(c, in, 0.5) == Vec{1.0, 2.0, 3.0});
    const Vec bad{0.0};
    CHECK_THROWS_AS(checked_forward(c, bad, 0.5), ContractError);
  }

  TEST_CASE("discrete oracle marginals") {
    discrete::Config cfg;
    cfg.classes = 3;
    const discrete::BayesOracle o(cfg, {{0}, {0}, {2}});
    // uniform theta: the posterior over items is uniform, so class 0 has 2/3
    const Vec in{-1.0 / 3, -1.0 / 3, -1.0 / 3};
    const Vec logits = o.forward(in, 0.5);
    const Vec p = softmax(logits);
    CHECK(p[0] == doctest::Approx(2.0 / 3));
    CHECK(p[1] < 1e-12);
  }
}
