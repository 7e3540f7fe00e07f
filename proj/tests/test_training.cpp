#include <doctest.h>

#include <cmath>

#include "bfn/checkpoint.hpp"
#include "bfn/model.hpp"
#include "bfn/oracle.hpp"
#include "bfn/run_config.hpp"
#include "bfn/toy_data.hpp"
#include "bfn/training.hpp"

using namespace bfn;

namespace {

RunConfig tiny_text_config() {
  return RunConfig::parse(
      "modality = discrete\ndim = 16\nclasses = 27\nschedule = text\n"
      "hidden = 16\nfourier_pairs = 2\nbatch_size = 8\nsteps = 5\n"
      "learning_rate = 1e-3\neval_every = 2\neval_passes = 1\nseed = 9\n");
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("ema converges to frozen parameters") {
    Vec params{0.3, -2.0, 7.5};
    Vec ema{0.0, 0.0, 0.0};
    for (std::uint64_t s = 0; s < 100000; ++s) ema_update(ema, params, 0.9999, s);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(ema[i] - params[i]) < 1e-8);
  }

  TEST_CASE("adamw step moves against the gradient") {
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.weight_decay = 0.0;
    Vec p{1.0, -1.0};
    AdamState st;
    const Vec g{2.0, -3.0};
    adamw_step(p, g, st, tc);
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(-0.9).epsilon(1e-6));
    CHECK(st.step == 1);
  }

  TEST_CASE("training is deterministic and thread-count independent") {
    const RunConfig cfg = tiny_text_config();
    const Dataset ds = toy::text();
    TrainState a(cfg.model(), cfg.predictor_spec(), cfg.train());
    TrainState b(cfg.model(), cfg.predictor_spec(), cfg.train());
    train_steps(a, ds, 5, {1, {}});
    train_steps(b, ds, 5, {3, {}});
    CHECK(a.net.params() == b.net.params());
    CHECK(a.ema == b.ema);
    REQUIRE(a.history.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(std::isnan(a.history[0].eval_loss));
    CHECK(!std::isnan(a.history[1].eval_loss));
  }

  TEST_CASE("history csv") {
    std::vector<HistoryRow> rows{{1, 2.5, std::nan("")}, {2, 1.25, 1.5}};
    const std::string csv = history_csv(rows);
    CHECK(csv.rfind("step,train_loss,eval_loss\n", 0) == 0);
    CHECK(csv.find("1,2.5,\n") != std::string::npos);
  }

  TEST_CASE("checkpoint round trip is byte identical") {
    const RunConfig cfg = tiny_text_config();
    TrainState st(cfg.model(), cfg.predictor_spec(), cfg.train());
    train_steps(st, toy::text(), 3);
    const auto ck = Checkpoint::from_state(st, cfg);
    const std::string bytes = ck.encode();
    const auto back = Checkpoint::decode(bytes);
    CHECK(back.encode() == bytes);
    CHECK(back.params == st.net.params());
    CHECK(back.history.size() == 3);

    // resuming gives the same continuation as running straight through
    TrainState resumed = back.to_state();
    TrainState straight = st;
    train_steps(resumed, toy::text(), 2);
    train_steps(straight, toy::text(), 2);
    CHECK(resumed.net.params() == straight.net.params());

    std::string corrupt = bytes;
    corrupt.resize(corrupt.size() - 5);
    CHECK_THROWS(Checkpoint::decode(corrupt));
  }

  TEST_CASE("oracle checkpoint evaluates to an all-zero table") {
    RunConfig cfg = tiny_text_config();
    cfg.set("predictor", "oracle");
    Dataset one = toy::text();
    one.indices.resize(16);
    const auto ck = Checkpoint::decode(Checkpoint::oracle(cfg, one).encode());
    const auto pred = ck.predictor();
    const auto table = evaluate(*pred, cfg.model(), one, {10, 25}, 3, 1);
    REQUIRE(table.rows.size() == 4);
    CHECK(table.rows[2].label == "inf");
    for (const auto& r : table.rows) CHECK(std::abs(r.nats) < 1e-9);
  }

  TEST_CASE("nats and bits agree") {
    EvalTable t;
    t.dims = 16;
    EvalEntry e{"inf", 0, 16 * std::log(2.0), 0.0};
    CHECK(t.bits_per_dim(e) == doctest::Approx(1.0));
  }

  TEST_CASE("doubling the passes shrinks the standard error") {
    const Dataset ds = toy::text();
    ModelConfig m;
    m.modality = Modality::discrete;
    m.dim = 16;
    m.classes = 27;
    m.beta1 = 0.75;
    const ConstantPredictor zero(16 * 27, Vec(16 * 27, 0.0));
    const auto a = evaluate(zero, m, ds, {10}, 64, 1, 1, false);
    const auto b = evaluate(zero, m, ds, {10}, 128, 1, 1, false);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const double ratio = b.rows[i].se / a.rows[i].se;
      CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.25));
    }
  }

  TEST_CASE("config errors") {
    CHECK_THROWS(RunConfig::parse("no_such_key = 1\n"));
    CHECK_THROWS(RunConfig::parse("steps = many\n").train());
    RunConfig c = RunConfig::parse("schedule = bins16\n");
    CHECK(c.resolved_schedule().first == std::sqrt(0.001));
    c.apply_override("sigma1=0.02");
    CHECK(c.resolved_schedule().first == 0.02);
    const RunConfig again = RunConfig::parse(c.snapshot());
    CHECK(again.snapshot() == c.snapshot());
  }
}
