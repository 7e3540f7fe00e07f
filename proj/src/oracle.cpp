#include "bfn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bfn {

ConstantPredictor::ConstantPredictor(std::size_t input_width, Vec output)
    : in_(input_width), out_(std::move(output)) {}

Vec ConstantPredictor::forward(std::span<const double> input, double) const {
  if (input.size() != in_) throw ContractError("constant predictor: input width mismatch");
  return out_;
}

namespace {

// Normalised posterior weights from unnormalised log weights.
Vec normalise_log_weights(Vec logw) {
  const double z = log_sum_exp(logw);
  for (double& v : logw) v = std::exp(v - z);
  return logw;
}

Vec flow_posterior_weights(const std::vector<Vec>& data, std::span<const double> mean,
                           double g) {
  const double var = g * (1.0 - g);
  Vec logw(data.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    double s = 0.0;
    for (std::size_t d = 0; d < mean.size(); ++d) {
      const double e = mean[d] - g * data[j][d];
      s += e * e;
    }
    logw[j] = -s / (2.0 * var);
  }
  return normalise_log_weights(std::move(logw));
}

void check_dataset(const std::vector<Vec>& data, std::size_t dim) {
  if (data.empty()) throw DomainError("oracle: dataset must not be empty");
  for (const auto& x : data)
    if (x.size() != dim) throw ContractError("oracle: dataset item has the wrong width");
}

}  // namespace

namespace continuous {

BayesOracle::BayesOracle(Config cfg, std::vector<Vec> dataset)
    : cfg_(cfg), data_(std::move(dataset)) {
  cfg_.validate();
  check_dataset(data_, cfg_.dim);
}

Vec BayesOracle::posterior_mean(std::span<const double> mean, double t) const {
  const double g = cfg_.schedule().gamma(t);
  Vec m(cfg_.dim, 0.0);
  if (g == 0.0 || g == 1.0) {
    for (const auto& x : data_)
      for (std::size_t d = 0; d < cfg_.dim; ++d) m[d] += x[d] / data_.size();
    return m;
  }
  const Vec w = flow_posterior_weights(data_, mean, g);
  for (std::size_t j = 0; j < data_.size(); ++j)
    for (std::size_t d = 0; d < cfg_.dim; ++d) m[d] += w[j] * data_[j][d];
  return m;
}

Vec BayesOracle::forward(std::span<const double> input, double t) const {
  if (input.size() != cfg_.dim) throw ContractError("oracle: input width mismatch");
  const double g = cfg_.schedule().gamma(t);
  if (g == 0.0) return Vec(cfg_.dim, 0.0);
  const double s = std::sqrt((1.0 - g) / g);
  const Vec m = posterior_mean(input, t);
  Vec eps(cfg_.dim);
  for (std::size_t d = 0; d < cfg_.dim; ++d) eps[d] = (input[d] / g - m[d]) / s;
  return eps;
}

std::unique_ptr<Predictor> single_datum_oracle(const Config& cfg, Vec x) {
  return std::make_unique<BayesOracle>(cfg, std::vector<Vec>{std::move(x)});
}

}  // namespace continuous

namespace discretised {

BayesOracle::BayesOracle(Config cfg, std::vector<Vec> dataset, double sigma_floor)
    : cfg_(cfg), data_(std::move(dataset)), floor_(sigma_floor) {
  cfg_.validate();
  check_dataset(data_, cfg_.dim);
  if (!(floor_ >= 0.0)) throw DomainError("oracle: sigma floor must be non-negative");
}

Vec BayesOracle::forward(std::span<const double> input, double t) const {
  const std::size_t D = cfg_.dim;
  if (input.size() != D) throw ContractError("oracle: input width mismatch");
  Vec out(2 * D, 0.0);
  const double g = cfg_.schedule().gamma(t);
  if (g == 0.0) return out;
  const double s = std::sqrt((1.0 - g) / g);
  const Vec w = flow_posterior_weights(data_, input, g);
  for (std::size_t d = 0; d < D; ++d) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < data_.size(); ++j) {
      m += w[j] * data_[j][d];
      m2 += w[j] * data_[j][d] * data_[j][d];
    }
    const double var = std::max(m2 - m * m, 0.0);
    out[d] = (input[d] / g - m) / s;
    out[D + d] = 0.5 * std::log(var + floor_ * floor_) - std::log(s);
  }
  return out;
}

std::unique_ptr<Predictor> single_datum_oracle(const Config& cfg, Vec x) {
  return std::make_unique<BayesOracle>(cfg, std::vector<Vec>{std::move(x)}, 0.0);
}

}  // namespace discretised

namespace discrete {

BayesOracle::BayesOracle(Config cfg, std::vector<std::vector<int>> dataset)
    : cfg_(cfg), data_(std::move(dataset)) {
  cfg_.validate();
  if (data_.empty()) throw DomainError("oracle: dataset must not be empty");
  for (const auto& x : data_) {
    if (x.size() != cfg_.dim) throw ContractError("oracle: dataset item has the wrong width");
    for (int k : x)
      if (k < 0 || k >= cfg_.classes) throw DomainError("oracle: class index out of range");
  }
}

std::size_t BayesOracle::input_width() const {
  return modality_input_width(Modality::discrete, cfg_.dim, cfg_.classes);
}

std::size_t BayesOracle::output_width() const {
  return modality_output_width(Modality::discrete, cfg_.dim, cfg_.classes);
}

Vec BayesOracle::forward(std::span<const double> input, double) const {
  if (input.size() != input_width()) throw ContractError("oracle: input width mismatch");
  const int K = cfg_.classes;
  const std::size_t D = cfg_.dim;
  constexpr double kTiny = 1e-300;
  auto log_theta = [&](std::size_t d, int k) {
    double th;
    if (K == 2) {
      const double t0 = 0.5 * (input[d] + 1.0);
      th = k == 0 ? t0 : 1.0 - t0;
    } else {
      th = 0.5 * (input[d * K + k] + 1.0);
    }
    return std::log(std::max(th, kTiny));
  };
  Vec logw(data_.size(), 0.0);
  for (std::size_t j = 0; j < data_.size(); ++j)
    for (std::size_t d = 0; d < D; ++d) logw[j] += log_theta(d, data_[j][d]);
  const Vec w = normalise_log_weights(std::move(logw));

  Vec marg(D * K, 0.0);
  for (std::size_t j = 0; j < data_.size(); ++j)
    for (std::size_t d = 0; d < D; ++d) marg[d * K + data_[j][d]] += w[j];
  if (K == 2) {
    Vec out(D);
    for (std::size_t d = 0; d < D; ++d)
      out[d] = std::log(std::max(marg[2 * d], kTiny)) - std::log(std::max(marg[2 * d + 1], kTiny));
    return out;
  }
  for (double& v : marg) v = std::log(std::max(v, kTiny));
  return marg;
}

std::unique_ptr<Predictor> single_datum_oracle(const Config& cfg, std::vector<int> x) {
  cfg.validate();
  if (x.size() != cfg.dim) throw ContractError("oracle: datum has the wrong width");
  const int K = cfg.classes;
  const std::size_t in = modality_input_width(Modality::discrete, cfg.dim, K);
  if (K == 2) {
    Vec out(cfg.dim);
    for (std::size_t d = 0; d < cfg.dim; ++d) out[d] = x[d] == 0 ? 80.0 : -80.0;
    return std::make_unique<ConstantPredictor>(in, std::move(out));
  }
  Vec out(cfg.dim * K, -80.0);
  for (std::size_t d = 0; d < cfg.dim; ++d) {
    if (x[d] < 0 || x[d] >= K) throw DomainError("oracle: class index out of range");
    out[d * K + x[d]] = 0.0;
  }
  return std::make_unique<ConstantPredictor>(in, std::move(out));
}

}  // namespace discrete

}  // namespace bfn
