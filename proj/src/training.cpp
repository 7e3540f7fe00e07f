#include "bfn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

namespace bfn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw DomainError("batch_size must be positive");
  if (steps < 0) throw DomainError("steps must be non-negative");
  if (!(learning_rate >= 0.0)) throw DomainError("learning_rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw DomainError("weight_decay must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw DomainError("adam_beta1 must lie in [0,1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw DomainError("adam_beta2 must lie in [0,1)");
  if (!(adam_eps > 0.0)) throw DomainError("adam_eps must be positive");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw DomainError("ema_decay must lie in [0,1)");
  if (eval_every < 0) throw DomainError("eval_every must be non-negative");
  if (eval_passes < 1) throw DomainError("eval_passes must be positive");
  if (!(init_scale >= 0.0)) throw DomainError("init_scale must be non-negative");
}

void adamw_step(Vec& params, std::span<const double> grads, AdamState& s, const TrainConfig& cfg) {
  if (grads.size() != params.size()) throw ContractError("adamw: gradient size mismatch");
  if (s.m.empty()) s.m.assign(params.size(), 0.0);
  if (s.v.empty()) s.v.assign(params.size(), 0.0);
  if (s.m.size() != params.size() || s.v.size() != params.size())
    throw ContractError("adamw: moment size mismatch");
  ++s.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2, lr = cfg.learning_rate;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
  const double decay = 1.0 - lr * cfg.weight_decay;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double g = grads[j];
    s.m[j] = b1 * s.m[j] + (1.0 - b1) * g;
    s.v[j] = b2 * s.v[j] + (1.0 - b2) * g * g;
    const double mh = s.m[j] / c1;
    const double vh = s.v[j] / c2;
    params[j] = params[j] * decay - lr * mh / (std::sqrt(vh) + cfg.adam_eps);
  }
}

void ema_update(Vec& ema, std::span<const double> params, double decay, std::uint64_t step) {
  if (ema.size() != params.size()) throw ContractError("ema: size mismatch");
  const double s = static_cast<double>(step);
  const double d = std::min(decay, (1.0 + s) / (10.0 + s));
  for (std::size_t j = 0; j < ema.size(); ++j) ema[j] = d * ema[j] + (1.0 - d) * params[j];
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string out = "step,train_loss,eval_loss\n";
  for (const auto& r : rows)
    out += std::to_string(r.step) + "," + fmt(r.train_loss) + "," + fmt(r.eval_loss) + "\n";
  return out;
}

TrainState::TrainState(ModelConfig m, PredictorSpec spec, TrainConfig t)
    : model(m), train(t), net(spec), rng(t.seed) {
  model.validate();
  train.validate();
  if (spec.input_width() != model.input_width() || spec.output_width() != model.output_width())
    throw ContractError("predictor spec does not match the model configuration");
  Rng init = rng.split(0x1417);
  net = Mlp::initialised(std::move(spec), init, train.init_scale);
  ema = net.params();
  adam.m.assign(ema.size(), 0.0);
  adam.v.assign(ema.size(), 0.0);
}

Mlp TrainState::ema_net() const {
  Mlp m = net;
  m.set_params(ema);
  return m;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

BatchGrad batch_gradient(const Mlp& net, const ModelConfig& cfg, const Dataset& ds,
                         std::uint64_t batch_seed, int batch_size, int threads) {
  Rng batch_rng(batch_seed);
  std::vector<std::size_t> items(batch_size);
  for (auto& i : items) i = batch_rng.uniform_index(ds.size());

  const bool always_consult = cfg.modality == Modality::discrete;
  std::vector<double> losses(batch_size, 0.0);
  std::vector<Vec> shard_grad(kGradShards, Vec(net.param_count(), 0.0));
  parallel_for(kGradShards, threads, [&](std::size_t s) {
    const int lo = static_cast<int>(s) * batch_size / kGradShards;
    const int hi = static_cast<int>(s + 1) * batch_size / kGradShards;
    Mlp::Tape tape;
    for (int b = lo; b < hi; ++b) {
      Rng rng = batch_rng.split(static_cast<std::uint64_t>(b) + 1);
      const double t = rng.uniform();
      const FlowDraw draw = draw_flow(rng, cfg, ds, items[b], t);
      Vec out;
      const bool consult = always_consult || t >= cfg.t_min;
      if (consult) out = net.forward(draw.network_input, t, tape);
      const LossGrad lg = cts_time_loss(cfg, ds, items[b], draw, out);
      losses[b] = lg.loss;
      if (consult && !lg.d_output.empty()) net.backward(tape, lg.d_output, shard_grad[s]);
    }
  });

  for (int width = 1; width < kGradShards; width *= 2)
    for (int s = 0; s + width < kGradShards; s += 2 * width) {
      auto& a = shard_grad[s];
      const auto& b = shard_grad[s + width];
      for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
    }

  BatchGrad r;
  r.grad = std::move(shard_grad[0]);
  for (double& g : r.grad) g /= batch_size;
  for (double l : losses) r.loss += l;
  r.loss /= batch_size;
  return r;
}

namespace {

std::uint64_t eval_seed(std::uint64_t seed) { return seed ^ 0x5eed0fe7a1ull; }

}  // namespace

void train_steps(TrainState& st, const Dataset& ds, int steps, const TrainOptions& opt) {
  st.model.check_dataset(ds);
  for (int k = 0; k < steps; ++k) {
    const std::uint64_t batch_seed = st.rng();
    BatchGrad bg = batch_gradient(st.net, st.model, ds, batch_seed, st.train.batch_size, opt.threads);
    const std::uint64_t step = st.adam.step + 1;
    bool finite = std::isfinite(bg.loss);
    for (double g : bg.grad) finite = finite && std::isfinite(g);
    if (!finite) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "non-finite loss at step %llu (batch seed %llu)",
                    static_cast<unsigned long long>(step), static_cast<unsigned long long>(batch_seed));
      throw TrainingError(buf);
    }
    adamw_step(st.net.params(), bg.grad, st.adam, st.train);
    ema_update(st.ema, st.net.params(), st.train.ema_decay, st.adam.step - 1);
    HistoryRow row{step, bg.loss, std::numeric_limits<double>::quiet_NaN()};
    if (st.train.eval_every > 0 && step % static_cast<std::uint64_t>(st.train.eval_every) == 0) {
      const Mlp ema = st.ema_net();
      row.eval_loss = mean_cts_loss(ema, st.model, ds, eval_seed(st.train.seed),
                                    st.train.eval_passes, opt.threads);
    }
    st.history.push_back(row);
    if (opt.on_step) opt.on_step(row);
  }
}

namespace {

// samples[p][i] for p < passes, i < items, each from its own stream.
std::vector<Vec> sample_grid(std::size_t items, int passes, std::uint64_t seed, int threads,
                             const std::function<double(Rng&, std::size_t)>& draw) {
  std::vector<Vec> grid(passes, Vec(items, 0.0));
  const Rng base(seed);
  parallel_for(items * passes, threads, [&](std::size_t j) {
    const std::size_t p = j / items, i = j % items;
    Rng rng = base.split(j + 1);
    grid[p][i] = draw(rng, i);
  });
  return grid;
}

EvalEntry summarise(std::string label, int n, const std::vector<Vec>& grid) {
  EvalEntry e{std::move(label), n, 0.0, std::numeric_limits<double>::quiet_NaN()};
  Vec pass_means;
  for (const auto& row : grid) {
    double s = 0.0;
    for (double v : row) s += v;
    pass_means.push_back(s / row.size());
  }
  for (double m : pass_means) e.nats += m;
  e.nats /= pass_means.size();
  if (pass_means.size() > 1) {
    double ss = 0.0;
    for (double m : pass_means) ss += (m - e.nats) * (m - e.nats);
    e.se = std::sqrt(ss / (pass_means.size() - 1) / pass_means.size());
  }
  return e;
}

}  // namespace

double mean_cts_loss(const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                     std::uint64_t seed, int passes, int threads) {
  const auto grid = sample_grid(ds.size(), passes, seed, threads, [&](Rng& rng, std::size_t i) {
    return loss_cts_time(rng, p, cfg, ds, i);
  });
  return summarise("inf", 0, grid).nats;
}

EvalTable evaluate(const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                   const std::vector<int>& n_values, int passes, std::uint64_t seed, int threads,
                   bool with_reconstruction) {
  cfg.check_dataset(ds);
  if (passes < 1) throw DomainError("evaluate: passes must be positive");
  EvalTable table;
  table.dims = cfg.dim;
  table.passes = passes;
  const Rng root(seed);
  std::uint64_t column = 0;
  for (int n : n_values) {
    if (n < 1) throw DomainError("evaluate: n must be at least 1");
    const auto grid = sample_grid(ds.size(), passes, root.split(++column)(), threads,
                                  [&](Rng& rng, std::size_t i) { return loss_n_step(rng, p, cfg, ds, i, n); });
    table.rows.push_back(summarise(std::to_string(n), n, grid));
  }
  {
    const auto grid = sample_grid(ds.size(), passes, root.split(++column)(), threads,
                                  [&](Rng& rng, std::size_t i) { return loss_cts_time(rng, p, cfg, ds, i); });
    table.rows.push_back(summarise("inf", 0, grid));
  }
  if (with_reconstruction) {
    const auto grid = sample_grid(ds.size(), passes, root.split(++column)(), threads,
                                  [&](Rng& rng, std::size_t i) { return reconstruction_loss(rng, p, cfg, ds, i); });
    table.rows.push_back(summarise("recon", 0, grid));
  }
  return table;
}

double EvalTable::bits_per_dim(const EvalEntry& e) const {
  return e.nats / (static_cast<double>(dims) * std::numbers::ln2);
}

std::string EvalTable::to_text() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %14s %14s %12s\n", "n", "nats/item", "bits/dim", "se(nats)");
  out << buf;
  for (const auto& e : rows) {
    std::snprintf(buf, sizeof buf, "%-8s %14.6f %14.6f %12.6f\n", e.label.c_str(), e.nats,
                  bits_per_dim(e), e.se);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "(%d passes, %zu dims per item)\n", passes, dims);
  out << buf;
  return out.str();
}

std::string EvalTable::to_csv() const {
  std::string out = "n,nats_per_item,bits_per_dim,se_nats,passes\n";
  for (const auto& e : rows)
    out += e.label + "," + fmt(e.nats) + "," + fmt(bits_per_dim(e)) + "," + fmt(e.se) + "," +
           std::to_string(passes) + "\n";
  return out;
}

}  // namespace bfn
