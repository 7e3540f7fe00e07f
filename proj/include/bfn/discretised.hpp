#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bfn/categorical.hpp"
#include "bfn/continuous.hpp"
#include "bfn/numerics.hpp"
#include "bfn/predictor.hpp"

/// Data quantised to K equal bins tiling [-1, 1]. Shares the Gaussian input
/// distribution, sender and Bayesian flow with the continuous modality; the
/// output is a clipped-Gaussian histogram per dimension.
///
/// Bin indices are 0-based throughout: bin k covers
/// [k*2/K - 1, (k+1)*2/K - 1] with centre (2k+1)/K - 1.
namespace bfn::discretised {

struct BinGeometry {
  int bins = 2;

  explicit BinGeometry(int k);
  double width() const { return 2.0 / bins; }
  double center(int k) const;
  double left(int k) const;
  double right(int k) const;
};

struct Quantised {
  std::vector<int> index;
  Vec centers;
};

/// Nearest-centre assignment. A value on a bin boundary goes to the higher
/// bin. Values outside [-1, 1] raise DomainError.
Quantised quantise(std::span<const double> x_raw, int bins);

/// Gaussian CDF clipped to [-1, 1]: 0 at or below -1, 1 at or above 1.
double discretised_cdf(double mu, double sigma, double x);

/// Per-bin masses G(right(k)) - G(left(k)) for one dimension. sigma == 0
/// is treated as a point mass at mu.
Vec bin_masses(double mu, double sigma, int bins);

struct Config {
  double sigma1 = 0.001;
  int bins = 256;
  std::size_t dim = 1;
  double t_min = 1e-6;

  void validate() const;
  continuous::Config flow_config() const;
  AccuracySchedule schedule() const { return AccuracySchedule::continuous_sigma(sigma1); }
};

/// Per-dimension Gaussian (mu_x, sigma_x) implied by the network output
/// (first D entries mu_eps, last D entries ln sigma_eps). For t < t_min
/// the standard normal is returned and net may be empty.
struct GaussianParams {
  Vec mu;
  Vec sigma;
};
GaussianParams output_gaussian(const Config& cfg, std::span<const double> mean, double t,
                               std::span<const double> net);

Categorical output_from_network(const Config& cfg, std::span<const double> mean, double t,
                                std::span<const double> net);

/// Histogram output distribution for the given input parameters.
Categorical output_distribution(const Predictor& predictor, const Config& cfg,
                                const continuous::Params& p, double t);

/// Expected bin centre per dimension.
Vec k_hat(const Categorical& out);

/// Single-sample estimate of the n-step loss (Monte-Carlo KL between the
/// Gaussian sender and the Gaussian-mixture receiver). x must hold bin
/// centres.
double loss_n_step(Rng& rng, const Predictor& predictor, const Config& cfg,
                   std::span<const double> x, int n, std::optional<int> i = {});

/// The per-step quantity without the factor n, given an output histogram,
/// the data and an accuracy. Exposed for KL checks.
double mixture_log_ratio(Rng& rng, const Categorical& out, std::span<const double> x,
                         double alpha);

/// Single-sample estimate of -ln(sigma1) sigma1^(-2t) ||x - k_hat||^2.
double loss_cts_time(Rng& rng, const Predictor& predictor, const Config& cfg,
                     std::span<const double> x, std::optional<double> t = {});

/// Continuous-time loss and gradient with respect to the raw network output.
LossGrad cts_time_loss_from_output(const Config& cfg, std::span<const double> x,
                                   std::span<const double> mean, double t,
                                   std::span<const double> net);

/// -sum_d ln p_O(bin of x_d | theta, 1). Zero-probability bins contribute
/// -kLogFloor rather than +inf.
double reconstruction_loss(Rng& rng, const Predictor& predictor, const Config& cfg,
                           std::span<const double> x);

/// Reconstruction loss of a continuous model scored on K bins: the model's
/// final x_hat is smeared into a discretised Gaussian with the given std.
double discretised_gaussian_reconstruction(std::span<const double> x_hat, double std_dev,
                                           std::span<const double> x, int bins);

/// Reconstruction std used for continuous models scored on 256 or 16 bins.
double reconstruction_std(double sigma1, int bins);

/// n-step generation; returns bin centres.
Vec generate(Rng& rng, const Predictor& predictor, const Config& cfg, int n);

}  // namespace bfn::discretised
