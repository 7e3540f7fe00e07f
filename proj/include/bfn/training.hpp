#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfn/dataset.hpp"
#include "bfn/mlp.hpp"
#include "bfn/model.hpp"
#include "bfn/numerics.hpp"

namespace bfn {

struct TrainConfig {
  int batch_size = 64;
  int steps = 1000;
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-8;
  double ema_decay = 0.9999;
  std::uint64_t seed = 0;
  int eval_every = 100;  // 0 disables periodic evaluation
  int eval_passes = 4;
  double init_scale = 0.1;

  void validate() const;
};

struct AdamState {
  Vec m;
  Vec v;
  std::uint64_t step = 0;
};

/// Decoupled weight decay followed by a bias-corrected adaptive-moment step.
void adamw_step(Vec& params, std::span<const double> grads, AdamState& state,
                const TrainConfig& cfg);

/// ema <- d ema + (1 - d) params with d = min(decay, (1 + step) / (10 + step)).
void ema_update(Vec& ema, std::span<const double> params, double decay, std::uint64_t step);

struct HistoryRow {
  std::uint64_t step = 0;
  double train_loss = 0.0;
  double eval_loss = std::numeric_limits<double>::quiet_NaN();  // NaN when not evaluated
};

/// CSV with columns step,train_loss,eval_loss. Missing eval values are empty.
std::string history_csv(const std::vector<HistoryRow>& rows);

/// Everything a training run carries between steps.
struct TrainState {
  ModelConfig model;
  TrainConfig train;
  Mlp net;
  Vec ema;
  AdamState adam;
  Rng rng;
  std::vector<HistoryRow> history;

  TrainState(ModelConfig m, PredictorSpec spec, TrainConfig t);
  std::uint64_t step() const { return adam.step; }
  /// The network with EMA parameters.
  Mlp ema_net() const;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  int threads = 1;
  /// Called after every step with the new history row.
  std::function<void(const HistoryRow&)> on_step;
};

/// Number of fixed gradient shards per batch. Shard results are combined by
/// a pairwise tree sum, so the thread count never changes the result.
inline constexpr int kGradShards = 8;

/// Mean continuous-time loss of a batch and its gradient (summed over the
/// batch, divided by its size).
struct BatchGrad {
  double loss = 0.0;
  Vec grad;
};
BatchGrad batch_gradient(const Mlp& net, const ModelConfig& cfg, const Dataset& ds,
                         std::uint64_t batch_seed, int batch_size, int threads);

/// Runs `steps` more optimisation steps. A non-finite loss raises
/// TrainingError naming the step and the batch seed.
void train_steps(TrainState& state, const Dataset& ds, int steps, const TrainOptions& opt = {});

/// Mean continuous-time loss over the dataset, `passes` samples per item.
double mean_cts_loss(const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                     std::uint64_t seed, int passes, int threads = 1);

struct EvalEntry {
  std::string label;  // "n=10", ..., "inf", "recon"
  int n = 0;          // 0 for inf and recon
  double nats = 0.0;  // per item
  double se = 0.0;    // standard error of nats across passes
};

struct EvalTable {
  std::size_t dims = 1;
  int passes = 0;
  std::vector<EvalEntry> rows;
  double bits_per_dim(const EvalEntry& e) const;
  std::string to_text() const;
  std::string to_csv() const;
};

/// For every n: the mean of one n-step loss sample per item per pass; then
/// the continuous-time loss row and the reconstruction row.
EvalTable evaluate(const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                   const std::vector<int>& n_values, int passes, std::uint64_t seed,
                   int threads = 1, bool with_reconstruction = true);

/// Runs fn(i) for i in [0, n) on up to `threads` threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace bfn
