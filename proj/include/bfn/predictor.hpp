#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfn/numerics.hpp"

namespace bfn {

enum class Modality { continuous, discretised, discrete };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view name);

/// The network Psi(theta, t). Inputs are the modality-encoded input
/// parameters (continuous/discretised: the mean mu; discrete: 2*theta - 1,
/// or just 2*theta_1 - 1 per dimension when K = 2).
///
/// forward() must be safe to call concurrently on a frozen predictor.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t input_width() const = 0;
  virtual std::size_t output_width() const = 0;
  virtual Vec forward(std::span<const double> input, double t) const = 0;
};

/// A loss value together with its gradient with respect to the network
/// output. d_output is empty when the network was not consulted (t < t_min).
struct LossGrad {
  double loss = 0.0;
  Vec d_output;
};

/// Calls predictor.forward after checking both widths.
Vec checked_forward(const Predictor& predictor, std::span<const double> input, double t);

enum class Activation { tanh, silu };
std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct TimeFeatures {
  /// 0 means raw t as a single feature; otherwise sin/cos(2^j * pi * t)
  /// for j = 0..fourier_pairs-1.
  int fourier_pairs = 8;

  std::size_t width() const;
  void encode(double t, std::span<double> out) const;
  friend bool operator==(const TimeFeatures&, const TimeFeatures&) = default;
};

/// Architecture of a trainable predictor. Input and output widths follow
/// from the modality:
///   continuous:  D -> D        (eps_hat)
///   discretised: D -> 2D       (mu_eps, ln sigma_eps)
///   discrete:    KD -> KD, or D -> D when K = 2
struct PredictorSpec {
  Modality modality = Modality::continuous;
  std::size_t dim = 1;
  int classes = 0;  // K for discrete, bin count for discretised, unused otherwise
  std::vector<std::size_t> hidden = {256, 256};
  Activation activation = Activation::silu;
  TimeFeatures time;

  std::size_t input_width() const;
  std::size_t output_width() const;
  void validate() const;
  friend bool operator==(const PredictorSpec&, const PredictorSpec&) = default;
};

std::size_t modality_input_width(Modality m, std::size_t dim, int classes);
std::size_t modality_output_width(Modality m, std::size_t dim, int classes);

}  // namespace bfn
