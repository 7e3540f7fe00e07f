#pragma once

#include <memory>
#include <span>
#include <vector>

#include "bfn/continuous.hpp"
#include "bfn/discrete.hpp"
#include "bfn/discretised.hpp"
#include "bfn/predictor.hpp"

/// Deterministic predictors with no learnable state, used as exact
/// references in tests and in the verification harness.
namespace bfn {

/// Returns the same output vector for every input.
class ConstantPredictor final : public Predictor {
 public:
  ConstantPredictor(std::size_t input_width, Vec output);
  std::size_t input_width() const override { return in_; }
  std::size_t output_width() const override { return out_.size(); }
  Vec forward(std::span<const double> input, double t) const override;

 private:
  std::size_t in_;
  Vec out_;
};

namespace continuous {

/// eps_hat that makes x_hat equal the posterior mean of x given mu under
/// the flow likelihood N(mu | gamma x, gamma (1 - gamma) I) and a uniform
/// prior over the dataset. A one-item dataset gives x_hat = that item.
class BayesOracle final : public Predictor {
 public:
  BayesOracle(Config cfg, std::vector<Vec> dataset);
  std::size_t input_width() const override { return cfg_.dim; }
  std::size_t output_width() const override { return cfg_.dim; }
  Vec forward(std::span<const double> input, double t) const override;
  /// Posterior mean of x given the flow mean at t.
  Vec posterior_mean(std::span<const double> mean, double t) const;

 private:
  Config cfg_;
  std::vector<Vec> data_;
};

std::unique_ptr<Predictor> single_datum_oracle(const Config& cfg, Vec x);

}  // namespace continuous

namespace discretised {

/// Output Gaussian centred on the posterior mean of x given mu (dataset of
/// bin centres, uniform prior) with std sqrt(posterior variance + floor^2).
class BayesOracle final : public Predictor {
 public:
  BayesOracle(Config cfg, std::vector<Vec> dataset, double sigma_floor = 0.0);
  std::size_t input_width() const override { return cfg_.dim; }
  std::size_t output_width() const override { return 2 * cfg_.dim; }
  Vec forward(std::span<const double> input, double t) const override;

 private:
  Config cfg_;
  std::vector<Vec> data_;
  double floor_;
};

/// Point mass on the given bin centres whenever the network is consulted.
std::unique_ptr<Predictor> single_datum_oracle(const Config& cfg, Vec x);

}  // namespace discretised

namespace discrete {

/// Per-dimension marginals of the posterior over dataset items, whose
/// likelihood under the flow is proportional to prod_d theta_{d, x_d}.
class BayesOracle final : public Predictor {
 public:
  BayesOracle(Config cfg, std::vector<std::vector<int>> dataset);
  std::size_t input_width() const override;
  std::size_t output_width() const override;
  Vec forward(std::span<const double> input, double t) const override;

 private:
  Config cfg_;
  std::vector<std::vector<int>> data_;
};

/// Logits 0 on the datum's classes and -80 elsewhere.
std::unique_ptr<Predictor> single_datum_oracle(const Config& cfg, std::vector<int> x);

}  // namespace discrete

}  // namespace bfn
