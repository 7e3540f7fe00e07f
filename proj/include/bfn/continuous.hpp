#pragma once

#include <optional>
#include <span>

#include "bfn/numerics.hpp"
#include "bfn/predictor.hpp"
#include "bfn/schedule.hpp"

/// Continuous data in [x_min, x_max]^D: Gaussian input distribution with a
/// shared scalar precision, Gaussian sender N(x, 1/alpha), eps-parameterised
/// Dirac output distribution.
namespace bfn::continuous {

/// Input distribution parameters theta = {mu, rho}.
/// rho is data-independent (every update adds the same alpha to every
/// dimension), so one scalar is stored rather than a vector.
struct Params {
  Vec mean;
  double precision = 1.0;

  static Params prior(std::size_t dim) { return {Vec(dim, 0.0), 1.0}; }
};

struct Config {
  double sigma1 = 0.001;
  double t_min = 1e-6;
  double x_min = -1.0;
  double x_max = 1.0;
  std::size_t dim = 1;

  void validate() const;
  AccuracySchedule schedule() const { return AccuracySchedule::continuous_sigma(sigma1); }
};

/// Posterior after observing y ~ N(x, alpha^-1 I):
///   rho' = rho + alpha,  mu' = (mu rho + y alpha) / rho'.
Params bayes_update(const Params& p, std::span<const double> y, double alpha);

/// Draw from the Bayesian flow distribution
///   mu ~ N(gamma(t) x, gamma(t)(1 - gamma(t)) I),  rho = 1 + beta(t).
/// At t = 0 the prior is returned without consuming randomness.
Params flow_sample(Rng& rng, const Config& cfg, std::span<const double> x, double t);

/// x_hat = mu/gamma - sqrt((1-gamma)/gamma) * eps_hat, clipped to
/// [x_min, x_max]. Zero vector when t < t_min.
Vec x_hat_from_epsilon(const Config& cfg, std::span<const double> mean, double t,
                       std::span<const double> eps_hat);

/// Output prediction x_hat(theta, t). The predictor is not consulted for
/// t < t_min.
Vec output_prediction(const Predictor& predictor, const Config& cfg, const Params& p,
                      double t);

/// Single-sample estimate of the n-step loss, in nats. i is drawn uniformly
/// from 1..n unless given.
double loss_n_step(Rng& rng, const Predictor& predictor, const Config& cfg,
                   std::span<const double> x, int n, std::optional<int> i = {});

/// Single-sample estimate of the continuous-time loss
///   -ln(sigma1) sigma1^(-2t) ||x - x_hat(theta, t)||^2.
double loss_cts_time(Rng& rng, const Predictor& predictor, const Config& cfg,
                     std::span<const double> x, std::optional<double> t = {});

/// Continuous-time loss and its gradient with respect to eps_hat, given the
/// flow sample mean and the network output at t.
LossGrad cts_time_loss_from_output(const Config& cfg, std::span<const double> x,
                                   std::span<const double> mean, double t,
                                   std::span<const double> eps_hat);

/// Reconstruction loss under isotropic measurement noise noise_sigma:
///   ||x - x_hat(theta, 1)||^2 / (2 noise_sigma^2), theta ~ flow at t = 1.
double reconstruction_loss(Rng& rng, const Predictor& predictor, const Config& cfg,
                           std::span<const double> x, double noise_sigma);

/// n-step sample generation. Returns x_hat(theta, 1).
Vec generate(Rng& rng, const Predictor& predictor, const Config& cfg, int n);

/// Same as generate() but also returns the final input parameters.
struct Generation {
  Vec sample;
  Params final_params;
};
Generation generate_with_params(Rng& rng, const Predictor& predictor, const Config& cfg,
                                int n);

}  // namespace bfn::continuous
