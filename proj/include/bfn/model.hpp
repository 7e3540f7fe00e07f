#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "bfn/continuous.hpp"
#include "bfn/dataset.hpp"
#include "bfn/discrete.hpp"
#include "bfn/discretised.hpp"
#include "bfn/predictor.hpp"

/// Modality-independent front end over the three instantiations, keyed by a
/// flat configuration. Dataset items are addressed by index.
namespace bfn {

struct ModelConfig {
  Modality modality = Modality::continuous;
  std::size_t dim = 1;
  int classes = 0;  // bins (discretised) or K (discrete)
  double sigma1 = 0.001;
  double beta1 = 3.0;
  double t_min = 1e-6;
  /// Measurement noise for the continuous reconstruction loss. No default:
  /// zero means unset and reconstruction raises an error.
  double noise_sigma = 0.0;

  void validate() const;
  continuous::Config continuous_config() const;
  discretised::Config discretised_config() const;
  discrete::Config discrete_config() const;
  /// Width of the encoded predictor input and of its output.
  std::size_t input_width() const { return modality_input_width(modality, dim, classes); }
  std::size_t output_width() const { return modality_output_width(modality, dim, classes); }
  /// Throws unless the dataset has the same modality, dim and classes.
  void check_dataset(const Dataset& ds) const;
};

/// A flow sample at t together with what the loss needs afterwards.
struct FlowDraw {
  double t = 0.0;
  Vec network_input;
  Vec mean;  // continuous and discretised flow mean
};

FlowDraw draw_flow(Rng& rng, const ModelConfig& cfg, const Dataset& ds, std::size_t item,
                   double t);

/// Continuous-time loss of item and its gradient with respect to the
/// network output (empty when the network is not consulted).
LossGrad cts_time_loss(const ModelConfig& cfg, const Dataset& ds, std::size_t item,
                       const FlowDraw& draw, std::span<const double> net);

double loss_n_step(Rng& rng, const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                   std::size_t item, int n);
double loss_cts_time(Rng& rng, const Predictor& p, const ModelConfig& cfg, const Dataset& ds,
                     std::size_t item);
double reconstruction_loss(Rng& rng, const Predictor& p, const ModelConfig& cfg,
                           const Dataset& ds, std::size_t item);

/// One generated item: reals for continuous, indices otherwise (discretised
/// samples also carry their centres in reals).
struct Sample {
  Vec reals;
  std::vector<int> indices;
};
Sample generate(Rng& rng, const Predictor& p, const ModelConfig& cfg, int n);

/// Builds the Bayes-optimal oracle over every item of ds.
std::unique_ptr<Predictor> make_dataset_oracle(const ModelConfig& cfg, const Dataset& ds);

}  // namespace bfn
