#include "bfn/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bfn::discrete {

void Config::validate() const {
  if (!(beta1 > 0.0) || !std::isfinite(beta1)) throw DomainError("discrete: beta1 must be positive");
  if (classes < 2) throw DomainError("discrete: need at least 2 classes");
  if (dim == 0) throw DomainError("discrete: dimension must be positive");
}

namespace {

void check_classes(std::span<const int> x, int classes) {
  for (int v : x)
    if (v < 0 || v >= classes)
      throw DomainError("discrete: class index " + std::to_string(v) + " outside 0.." +
                        std::to_string(classes - 1));
}

void check_data(std::span<const int> x, const Config& cfg) {
  if (x.size() != cfg.dim)
    throw ContractError("discrete: data has " + std::to_string(x.size()) +
                        " dimensions, expected " + std::to_string(cfg.dim));
  check_classes(x, cfg.classes);
}

int draw_step(Rng& rng, int n, std::optional<int> i) {
  if (n < 1) throw DomainError("n must be at least 1");
  if (i) {
    if (*i < 1 || *i > n) throw DomainError("step index outside 1..n");
    return *i;
  }
  return 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
}

Params softmax_rows(std::span<const double> logits, std::size_t dim, int classes) {
  Params out(dim, classes);
  for (std::size_t d = 0; d < dim; ++d) {
    const Vec r = softmax(logits.subspan(d * classes, classes));
    std::copy(r.begin(), r.end(), out.row(d).begin());
  }
  return out;
}

}  // namespace

Vec one_hot(std::span<const int> x, int classes) {
  check_classes(x, classes);
  Vec e(x.size() * classes, 0.0);
  for (std::size_t d = 0; d < x.size(); ++d) e[d * classes + x[d]] = 1.0;
  return e;
}

Vec sender_mean(std::span<const int> x, double alpha, int classes) {
  Vec m = one_hot(x, classes);
  for (double& v : m) v = alpha * (classes * v - 1.0);
  return m;
}

Vec sender_sample(Rng& rng, std::span<const int> x, double alpha, int classes) {
  if (!(alpha > 0.0)) throw DomainError("sender_sample: alpha must be positive");
  return gaussian_sample(rng, sender_mean(x, alpha, classes), alpha * classes);
}

Params bayes_update(const Params& p, std::span<const double> y) {
  if (y.size() != p.probs.size()) throw ContractError("discrete bayes_update: width mismatch");
  Vec logits(y.size());
  for (std::size_t j = 0; j < y.size(); ++j)
    logits[j] = (p.probs[j] > 0.0 ? std::log(p.probs[j])
                                  : -std::numeric_limits<double>::infinity()) + y[j];
  Params out(p.dim, p.classes);
  for (std::size_t d = 0; d < p.dim; ++d) {
    const auto row = std::span<const double>(logits).subspan(d * p.classes, p.classes);
    const double z = log_sum_exp(row);
    for (int k = 0; k < p.classes; ++k) out.row(d)[k] = std::exp(row[k] - z);
  }
  return out;
}

Params flow_sample(Rng& rng, const Config& cfg, std::span<const int> x, double t) {
  check_data(x, cfg);
  const double b = cfg.schedule().beta(t);
  if (b == 0.0) return prior(cfg.dim, cfg.classes);
  const Vec y = gaussian_sample(rng, sender_mean(x, b, cfg.classes), b * cfg.classes);
  return softmax_rows(y, cfg.dim, cfg.classes);
}

Vec network_input(const Params& p) {
  if (p.classes == 2) {
    Vec v(p.dim);
    for (std::size_t d = 0; d < p.dim; ++d) v[d] = 2.0 * p.at(d, 0) - 1.0;
    return v;
  }
  Vec v(p.probs.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = 2.0 * p.probs[j] - 1.0;
  return v;
}

Categorical output_from_logits(std::span<const double> net, std::size_t dim, int classes) {
  if (net.size() != modality_output_width(Modality::discrete, dim, classes))
    throw ContractError("discrete: network output has the wrong width");
  if (classes == 2) {
    Categorical out(dim, 2);
    for (std::size_t d = 0; d < dim; ++d) {
      out.row(d)[0] = sigmoid(net[d]);
      out.row(d)[1] = sigmoid(-net[d]);
    }
    return out;
  }
  return softmax_rows(net, dim, classes);
}

Categorical output_distribution(const Predictor& predictor, const Config& cfg,
                                const Params& p, double t) {
  const Vec net = checked_forward(predictor, network_input(p), t);
  return output_from_logits(net, cfg.dim, cfg.classes);
}

Vec e_hat(const Categorical& out) { return out.probs; }

double mixture_log_ratio(Rng& rng, const Categorical& out, std::span<const int> x,
                         double alpha) {
  const int K = out.classes;
  const double var = alpha * K;
  const Vec y = sender_sample(rng, x, alpha, K);
  double r = log_gaussian_pdf(y, sender_mean(x, alpha, K), var);
  Vec terms(K), mk(K);
  for (std::size_t d = 0; d < out.dim; ++d) {
    const auto yd = std::span<const double>(y).subspan(d * K, K);
    const auto row = out.row(d);
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < K; ++j) mk[j] = alpha * ((j == k ? K : 0) - 1.0);
      terms[k] = (row[k] > 0.0 ? std::log(row[k]) : -std::numeric_limits<double>::infinity()) +
                 log_gaussian_pdf(yd, mk, var);
    }
    r -= log_sum_exp(terms);
  }
  return r;
}

double loss_n_step(Rng& rng, const Predictor& predictor, const Config& cfg,
                   std::span<const int> x, int n, std::optional<int> i) {
  check_data(x, cfg);
  const int step = draw_step(rng, n, i);
  const double t = static_cast<double>(step - 1) / n;
  const Params p = flow_sample(rng, cfg, x, t);
  const Categorical out = output_distribution(predictor, cfg, p, t);
  return n * mixture_log_ratio(rng, out, x, cfg.schedule().step_alpha(step, n));
}

double loss_cts_time(Rng& rng, const Predictor& predictor, const Config& cfg,
                     std::span<const int> x, std::optional<double> t) {
  check_data(x, cfg);
  const double tt = t ? *t : rng.uniform();
  const Params p = flow_sample(rng, cfg, x, tt);
  const Vec net = checked_forward(predictor, network_input(p), tt);
  return cts_time_loss_from_output(cfg, x, tt, net).loss;
}

LossGrad cts_time_loss_from_output(const Config& cfg, std::span<const int> x, double t,
                                   std::span<const double> net) {
  check_data(x, cfg);
  const int K = cfg.classes;
  const double w = 0.5 * K * cfg.schedule().alpha(t);
  const Categorical out = output_from_logits(net, cfg.dim, K);
  const Vec e = one_hot(x, K);
  LossGrad r;
  Vec g(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double diff = e[j] - out.probs[j];
    r.loss += w * diff * diff;
    g[j] = -2.0 * w * diff;
  }
  r.d_output.assign(net.size(), 0.0);
  for (std::size_t d = 0; d < cfg.dim; ++d) {
    const auto p = out.row(d);
    const double* gd = g.data() + d * K;
    if (K == 2) {
      r.d_output[d] = p[0] * p[1] * (gd[0] - gd[1]);
      continue;
    }
    double mean_g = 0.0;
    for (int k = 0; k < K; ++k) mean_g += p[k] * gd[k];
    for (int k = 0; k < K; ++k) r.d_output[d * K + k] = p[k] * (gd[k] - mean_g);
  }
  return r;
}

double reconstruction_loss(Rng& rng, const Predictor& predictor, const Config& cfg,
                           std::span<const int> x) {
  check_data(x, cfg);
  const Params p = flow_sample(rng, cfg, x, 1.0);
  const Categorical out = output_distribution(predictor, cfg, p, 1.0);
  double r = 0.0;
  for (std::size_t d = 0; d < cfg.dim; ++d) r -= floored_log(out.at(d, x[d]));
  return r;
}

std::vector<int> generate(Rng& rng, const Predictor& predictor, const Config& cfg, int n) {
  if (n < 1) throw DomainError("generate: n must be at least 1");
  const auto sched = cfg.schedule();
  Params p = prior(cfg.dim, cfg.classes);
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i - 1) / n;
    const auto k = sample_rows(rng, output_distribution(predictor, cfg, p, t));
    const double a = sched.step_alpha(i, n);
    p = bayes_update(p, sender_sample(rng, k, a, cfg.classes));
  }
  return sample_rows(rng, output_distribution(predictor, cfg, p, 1.0));
}

}  // namespace bfn::discrete
