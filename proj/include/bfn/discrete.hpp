#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bfn/categorical.hpp"
#include "bfn/numerics.hpp"
#include "bfn/predictor.hpp"
#include "bfn/schedule.hpp"

/// Categorical data with K classes per dimension. Input parameters live on
/// the probability simplex, the sender is Gaussian in logit space and the
/// Bayesian update is a multiplicative reweighting.
///
/// Class indices are 0-based. Sender vectors are blocked per dimension
/// (D blocks of K).
namespace bfn::discrete {

using Params = Categorical;

struct Config {
  double beta1 = 3.0;
  int classes = 2;
  std::size_t dim = 1;

  void validate() const;
  AccuracySchedule schedule() const { return AccuracySchedule::discrete_quadratic(beta1); }
};

inline Params prior(std::size_t dim, int classes) { return Categorical::uniform(dim, classes); }

/// Concatenated one-hot vectors, length K*D.
Vec one_hot(std::span<const int> x, int classes);

/// Sender mean alpha * (K e_x - 1).
Vec sender_mean(std::span<const int> x, double alpha, int classes);

/// y ~ N(alpha (K e_x - 1), alpha K I).
Vec sender_sample(Rng& rng, std::span<const int> x, double alpha, int classes);

/// theta' proportional to exp(y) * theta per row, evaluated in log space.
Params bayes_update(const Params& p, std::span<const double> y);

/// theta = softmax(y), y ~ N(beta(t) (K e_x - 1), beta(t) K I). Returns the
/// uniform prior at t = 0 without consuming randomness.
Params flow_sample(Rng& rng, const Config& cfg, std::span<const int> x, double t);

/// Network input 2 theta - 1; only the first class per dimension when K = 2.
Vec network_input(const Params& p);

/// Softmax per row, or a logistic sigmoid giving class 0 when K = 2.
Categorical output_from_logits(std::span<const double> net, std::size_t dim, int classes);

Categorical output_distribution(const Predictor& predictor, const Config& cfg,
                                const Params& p, double t);

/// Expected one-hot vector under the output distribution.
Vec e_hat(const Categorical& out);

/// ln N(y | sender(x)) - sum_d ln sum_k p_k N(y_d | sender(k)) with
/// y drawn from the sender at x. Single sample, no factor n.
double mixture_log_ratio(Rng& rng, const Categorical& out, std::span<const int> x,
                         double alpha);

double loss_n_step(Rng& rng, const Predictor& predictor, const Config& cfg,
                   std::span<const int> x, int n, std::optional<int> i = {});

/// K alpha(t) / 2 * ||e_x - e_hat||^2, i.e. K beta1 t ||e_x - e_hat||^2.
double loss_cts_time(Rng& rng, const Predictor& predictor, const Config& cfg,
                     std::span<const int> x, std::optional<double> t = {});

/// Continuous-time loss and gradient with respect to the network logits.
LossGrad cts_time_loss_from_output(const Config& cfg, std::span<const int> x, double t,
                                   std::span<const double> net);

double reconstruction_loss(Rng& rng, const Predictor& predictor, const Config& cfg,
                           std::span<const int> x);

std::vector<int> generate(Rng& rng, const Predictor& predictor, const Config& cfg, int n);

}  // namespace bfn::discrete
