#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bfn/numerics.hpp"
#include "bfn/predictor.hpp"

namespace bfn {

/// Offsets of one dense layer inside the flat parameter vector. Weights are
/// stored out x in, row-major, followed by out biases.
struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;

  std::size_t weight_count() const { return in * out; }
  std::size_t bias_offset() const { return offset + in * out; }
  std::size_t end() const { return offset + in * out + out; }
};

/// Fully connected network with hand-written reverse mode. The network sees
/// the encoded input parameters followed by the time features.
class Mlp final : public Predictor {
 public:
  /// Activations recorded by a forward pass. acts[l] is the input to layer l,
  /// pre[l] its pre-activation output.
  struct Tape {
    std::vector<Vec> acts;
    std::vector<Vec> pre;
    bool empty() const { return acts.empty(); }
  };

  /// All parameters zero.
  explicit Mlp(PredictorSpec spec);
  /// Weights N(0, 1/fan_in), zero biases, last layer scaled by final_scale.
  static Mlp initialised(PredictorSpec spec, Rng& rng, double final_scale = 0.1);

  std::size_t input_width() const override { return spec_.input_width(); }
  std::size_t output_width() const override { return spec_.output_width(); }
  Vec forward(std::span<const double> input, double t) const override;
  Vec forward(std::span<const double> input, double t, Tape& tape) const;

  /// Gradient of dot(output, upstream) with respect to every parameter,
  /// added into grad (same layout as params()).
  void backward(const Tape& tape, std::span<const double> upstream,
                std::span<double> grad) const;
  /// Convenience form returning a fresh gradient vector.
  Vec backward(const Tape& tape, std::span<const double> upstream) const;

  const PredictorSpec& spec() const { return spec_; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::size_t param_count() const { return params_.size(); }
  const Vec& params() const { return params_; }
  Vec& params() { return params_; }
  void set_params(Vec p);

 private:
  PredictorSpec spec_;
  std::vector<LayerShape> layers_;
  Vec params_;
};

}  // namespace bfn
