#include "bfn/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bfn::continuous {

void Config::validate() const {
  if (!(sigma1 > 0.0 && sigma1 < 1.0)) throw DomainError("continuous: sigma1 must lie in (0,1)");
  if (!(t_min > 0.0 && t_min < 0.1)) throw DomainError("continuous: t_min must lie in (0,0.1)");
  if (!(x_min < x_max)) throw DomainError("continuous: x_min must be below x_max");
  if (dim == 0) throw DomainError("continuous: dimension must be positive");
}

namespace {

void check_data(const Config& cfg, std::span<const double> x) {
  if (x.size() != cfg.dim)
    throw ContractError("continuous: data has " + std::to_string(x.size()) +
                        " dimensions, expected " + std::to_string(cfg.dim));
  for (double v : x)
    if (!(v >= cfg.x_min && v <= cfg.x_max))
      throw DomainError("continuous: data value " + std::to_string(v) + " outside range");
}

double squared_error(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

int draw_step(Rng& rng, int n, std::optional<int> i) {
  if (n < 1) throw DomainError("n must be at least 1");
  if (i) {
    if (*i < 1 || *i > n) throw DomainError("step index outside 1..n");
    return *i;
  }
  return 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
}

}  // namespace

Params bayes_update(const Params& p, std::span<const double> y, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("bayes_update: alpha must be positive");
  if (y.size() != p.mean.size()) throw ContractError("bayes_update: width mismatch");
  Params out;
  out.precision = p.precision + alpha;
  out.mean.resize(y.size());
  for (std::size_t d = 0; d < y.size(); ++d)
    out.mean[d] = (p.mean[d] * p.precision + y[d] * alpha) / out.precision;
  return out;
}

Params flow_sample(Rng& rng, const Config& cfg, std::span<const double> x, double t) {
  check_data(cfg, x);
  const auto sched = cfg.schedule();
  const double g = sched.gamma(t);
  if (g == 0.0) return Params::prior(x.size());
  Vec m(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) m[d] = g * x[d];
  return {gaussian_sample(rng, m, g * (1.0 - g)), 1.0 + sched.beta(t)};
}

Vec x_hat_from_epsilon(const Config& cfg, std::span<const double> mean, double t,
                       std::span<const double> eps_hat) {
  Vec out(mean.size(), 0.0);
  if (t < cfg.t_min) return out;
  const double g = cfg.schedule().gamma(t);
  const double s = std::sqrt((1.0 - g) / g);
  for (std::size_t d = 0; d < mean.size(); ++d)
    out[d] = std::clamp(mean[d] / g - s * eps_hat[d], cfg.x_min, cfg.x_max);
  return out;
}

Vec output_prediction(const Predictor& predictor, const Config& cfg, const Params& p,
                      double t) {
  if (t < cfg.t_min) return Vec(p.mean.size(), 0.0);
  Vec eps = checked_forward(predictor, p.mean, t);
  return x_hat_from_epsilon(cfg, p.mean, t, eps);
}

double loss_n_step(Rng& rng, const Predictor& predictor, const Config& cfg,
                   std::span<const double> x, int n, std::optional<int> i) {
  const int step = draw_step(rng, n, i);
  const double t = static_cast<double>(step - 1) / n;
  const Params p = flow_sample(rng, cfg, x, t);
  const Vec xh = output_prediction(predictor, cfg, p, t);
  const double a = cfg.schedule().step_alpha(step, n);
  return 0.5 * n * a * squared_error(x, xh);
}

double loss_cts_time(Rng& rng, const Predictor& predictor, const Config& cfg,
                     std::span<const double> x, std::optional<double> t) {
  const double tt = t ? *t : rng.uniform();
  const Params p = flow_sample(rng, cfg, x, tt);
  const Vec xh = output_prediction(predictor, cfg, p, tt);
  return 0.5 * cfg.schedule().alpha(tt) * squared_error(x, xh);
}

LossGrad cts_time_loss_from_output(const Config& cfg, std::span<const double> x,
                                   std::span<const double> mean, double t,
                                   std::span<const double> eps_hat) {
  const double w = 0.5 * cfg.schedule().alpha(t);
  LossGrad r;
  if (t < cfg.t_min) {
    for (double v : x) r.loss += w * v * v;
    return r;
  }
  const double g = cfg.schedule().gamma(t);
  const double s = std::sqrt((1.0 - g) / g);
  r.d_output.assign(x.size(), 0.0);
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double raw = mean[d] / g - s * eps_hat[d];
    const double xh = std::clamp(raw, cfg.x_min, cfg.x_max);
    const double e = x[d] - xh;
    r.loss += w * e * e;
    if (raw > cfg.x_min && raw < cfg.x_max) r.d_output[d] = 2.0 * w * e * s;
  }
  return r;
}

double reconstruction_loss(Rng& rng, const Predictor& predictor, const Config& cfg,
                           std::span<const double> x, double noise_sigma) {
  if (!(noise_sigma > 0.0)) throw DomainError("reconstruction_loss: noise sigma must be positive");
  const Params p = flow_sample(rng, cfg, x, 1.0);
  const Vec xh = output_prediction(predictor, cfg, p, 1.0);
  return squared_error(x, xh) / (2.0 * noise_sigma * noise_sigma);
}

Generation generate_with_params(Rng& rng, const Predictor& predictor, const Config& cfg,
                                int n) {
  if (n < 1) throw DomainError("generate: n must be at least 1");
  const auto sched = cfg.schedule();
  Params p = Params::prior(cfg.dim);
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i - 1) / n;
    const Vec xh = output_prediction(predictor, cfg, p, t);
    const double a = sched.step_alpha(i, n);
    const Vec y = gaussian_sample(rng, xh, 1.0 / a);
    p = bayes_update(p, y, a);
    p.precision = 1.0 + sched.beta(static_cast<double>(i) / n);  // pinned to the schedule
  }
  Vec out = output_prediction(predictor, cfg, p, 1.0);
  return {std::move(out), std::move(p)};
}

Vec generate(Rng& rng, const Predictor& predictor, const Config& cfg, int n) {
  return generate_with_params(rng, predictor, cfg, n).sample;
}

}  // namespace bfn::continuous
