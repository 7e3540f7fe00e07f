#include "bfn/discretised.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace bfn::discretised {

BinGeometry::BinGeometry(int k) : bins(k) {
  if (k < 2) throw DomainError("bin count must be at least 2");
}

double BinGeometry::center(int k) const { return (2.0 * k + 1.0) / bins - 1.0; }
double BinGeometry::left(int k) const { return 2.0 * k / bins - 1.0; }
double BinGeometry::right(int k) const { return 2.0 * (k + 1) / bins - 1.0; }

namespace {

int bin_of(double v, int bins) {
  const int k = static_cast<int>(std::floor((v + 1.0) * bins / 2.0));
  return std::clamp(k, 0, bins - 1);
}

double clipped_lower(double mu, double sigma, double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return normal_cdf((x - mu) / sigma);
}

double clipped_upper(double mu, double sigma, double x) {
  if (x <= -1.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return normal_cdf((mu - x) / sigma);
}

void check_data(std::span<const double> x, std::size_t dim) {
  if (x.size() != dim)
    throw ContractError("discretised: data has " + std::to_string(x.size()) +
                        " dimensions, expected " + std::to_string(dim));
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

Quantised quantise(std::span<const double> x_raw, int bins) {
  const BinGeometry geo(bins);
  Quantised q;
  q.index.reserve(x_raw.size());
  q.centers.reserve(x_raw.size());
  for (double v : x_raw) {
    if (!(v >= -1.0 && v <= 1.0))
      throw DomainError("quantise: value " + std::to_string(v) + " outside [-1,1]");
    const int k = bin_of(v, bins);
    q.index.push_back(k);
    q.centers.push_back(geo.center(k));
  }
  return q;
}

double discretised_cdf(double mu, double sigma, double x) {
  if (!(sigma > 0.0)) throw DomainError("discretised_cdf: sigma must be positive");
  return clipped_lower(mu, sigma, x);
}

Vec bin_masses(double mu, double sigma, int bins) {
  const BinGeometry geo(bins);
  Vec out(bins, 0.0);
  if (sigma == 0.0) {
    out[bin_of(std::clamp(mu, -1.0, 1.0), bins)] = 1.0;
    return out;
  }
  if (!(sigma > 0.0)) throw DomainError("bin_masses: sigma must be non-negative");
  for (int k = 0; k < bins; ++k) {
    const double l = geo.left(k), r = geo.right(k);
    // right of the mean the upper tail keeps more precision
    if (l > mu)
      out[k] = clipped_upper(mu, sigma, l) - clipped_upper(mu, sigma, r);
    else
      out[k] = clipped_lower(mu, sigma, r) - clipped_lower(mu, sigma, l);
    out[k] = std::max(out[k], 0.0);
  }
  return out;
}

void Config::validate() const {
  if (!(sigma1 > 0.0 && sigma1 < 1.0)) throw DomainError("discretised: sigma1 must lie in (0,1)");
  if (bins < 2) throw DomainError("discretised: need at least 2 bins");
  if (dim == 0) throw DomainError("discretised: dimension must be positive");
  if (!(t_min > 0.0 && t_min < 0.1)) throw DomainError("discretised: t_min must lie in (0,0.1)");
}

continuous::Config Config::flow_config() const {
  continuous::Config c;
  c.sigma1 = sigma1;
  c.t_min = t_min;
  c.dim = dim;
  return c;
}

GaussianParams output_gaussian(const Config& cfg, std::span<const double> mean, double t,
                               std::span<const double> net) {
  const std::size_t D = mean.size();
  GaussianParams g{Vec(D, 0.0), Vec(D, 1.0)};
  if (t < cfg.t_min) return g;
  if (net.size() != 2 * D) throw ContractError("discretised: network output must have width 2D");
  const double gam = cfg.schedule().gamma(t);
  const double s = std::sqrt((1.0 - gam) / gam);
  for (std::size_t d = 0; d < D; ++d) {
    g.mu[d] = mean[d] / gam - s * net[d];
    g.sigma[d] = s * std::exp(net[D + d]);
  }
  return g;
}

Categorical output_from_network(const Config& cfg, std::span<const double> mean, double t,
                                std::span<const double> net) {
  const GaussianParams g = output_gaussian(cfg, mean, t, net);
  Categorical out(mean.size(), cfg.bins);
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const Vec m = bin_masses(g.mu[d], g.sigma[d], cfg.bins);
    std::copy(m.begin(), m.end(), out.row(d).begin());
  }
  return out;
}

Categorical output_distribution(const Predictor& predictor, const Config& cfg,
                                const continuous::Params& p, double t) {
  if (t < cfg.t_min) return output_from_network(cfg, p.mean, t, {});
  const Vec net = checked_forward(predictor, p.mean, t);
  return output_from_network(cfg, p.mean, t, net);
}

Vec k_hat(const Categorical& out) {
  const BinGeometry geo(out.classes);
  Vec r(out.dim, 0.0);
  for (std::size_t d = 0; d < out.dim; ++d) {
    const auto row = out.row(d);
    for (int k = 0; k < out.classes; ++k) r[d] += row[k] * geo.center(k);
  }
  return r;
}

double mixture_log_ratio(Rng& rng, const Categorical& out, std::span<const double> x,
                         double alpha) {
  if (!(alpha > 0.0)) throw DomainError("mixture_log_ratio: alpha must be positive");
  check_data(x, out.dim);
  const BinGeometry geo(out.classes);
  const double var = 1.0 / alpha;
  const Vec y = gaussian_sample(rng, x, var);
  double r = log_gaussian_pdf(y, x, var);
  Vec terms(out.classes);
  for (std::size_t d = 0; d < out.dim; ++d) {
    const auto row = out.row(d);
    for (int k = 0; k < out.classes; ++k)
      terms[k] = (row[k] > 0.0 ? std::log(row[k]) : -std::numeric_limits<double>::infinity()) +
                 log_gaussian_pdf(y[d], geo.center(k), var);
    r -= log_sum_exp(terms);
  }
  return r;
}

double loss_n_step(Rng& rng, const Predictor& predictor, const Config& cfg,
                   std::span<const double> x, int n, std::optional<int> i) {
  check_data(x, cfg.dim);
  const int step = draw_step(rng, n, i);
  const double t = static_cast<double>(step - 1) / n;
  const auto p = continuous::flow_sample(rng, cfg.flow_config(), x, t);
  const Categorical out = output_distribution(predictor, cfg, p, t);
  const double a = cfg.schedule().step_alpha(step, n);
  return n * mixture_log_ratio(rng, out, x, a);
}

double loss_cts_time(Rng& rng, const Predictor& predictor, const Config& cfg,
                     std::span<const double> x, std::optional<double> t) {
  check_data(x, cfg.dim);
  const double tt = t ? *t : rng.uniform();
  const auto p = continuous::flow_sample(rng, cfg.flow_config(), x, tt);
  const Vec kh = k_hat(output_distribution(predictor, cfg, p, tt));
  double se = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) se += (x[d] - kh[d]) * (x[d] - kh[d]);
  return 0.5 * cfg.schedule().alpha(tt) * se;
}

LossGrad cts_time_loss_from_output(const Config& cfg, std::span<const double> x,
                                   std::span<const double> mean, double t,
                                   std::span<const double> net) {
  check_data(x, cfg.dim);
  const double w = 0.5 * cfg.schedule().alpha(t);
  const Vec kh = k_hat(output_from_network(cfg, mean, t, net));
  LossGrad r;
  for (std::size_t d = 0; d < x.size(); ++d) r.loss += w * (x[d] - kh[d]) * (x[d] - kh[d]);
  if (t < cfg.t_min) return r;

  // k_hat = c_{K-1} - (2/K) sum_j Phi((b_j - mu)/sigma) over inner boundaries b_j
  const BinGeometry geo(cfg.bins);
  const GaussianParams g = output_gaussian(cfg, mean, t, net);
  const double gam = cfg.schedule().gamma(t);
  const double s = std::sqrt((1.0 - gam) / gam);
  const std::size_t D = x.size();
  r.d_output.assign(2 * D, 0.0);
  for (std::size_t d = 0; d < D; ++d) {
    const double sig = g.sigma[d];
    if (!(sig > 0.0)) continue;
    double dk_dmu = 0.0, dk_dsig = 0.0;
    for (int j = 1; j < cfg.bins; ++j) {
      const double z = (geo.left(j) - g.mu[d]) / sig;
      const double phi = normal_pdf(z);
      dk_dmu += phi;
      dk_dsig += phi * z;
    }
    dk_dmu *= geo.width() / sig;
    dk_dsig *= geo.width() / sig;
    const double dl_dk = -2.0 * w * (x[d] - kh[d]);
    r.d_output[d] = dl_dk * dk_dmu * -s;
    r.d_output[D + d] = dl_dk * dk_dsig * sig;
  }
  return r;
}

double reconstruction_loss(Rng& rng, const Predictor& predictor, const Config& cfg,
                           std::span<const double> x) {
  check_data(x, cfg.dim);
  const auto p = continuous::flow_sample(rng, cfg.flow_config(), x, 1.0);
  const Categorical out = output_distribution(predictor, cfg, p, 1.0);
  const Quantised q = quantise(x, cfg.bins);
  double r = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) r -= floored_log(out.at(d, q.index[d]));
  return r;
}

double discretised_gaussian_reconstruction(std::span<const double> x_hat, double std_dev,
                                           std::span<const double> x, int bins) {
  if (!(std_dev > 0.0)) throw DomainError("reconstruction std must be positive");
  if (x_hat.size() != x.size()) throw ContractError("reconstruction: width mismatch");
  const Quantised q = quantise(x, bins);
  double r = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d)
    r -= floored_log(bin_masses(x_hat[d], std_dev, bins)[q.index[d]]);
  return r;
}

double reconstruction_std(double sigma1, int bins) {
  return bins == 16 ? 0.7 * sigma1 : sigma1;
}

Vec generate(Rng& rng, const Predictor& predictor, const Config& cfg, int n) {
  if (n < 1) throw DomainError("generate: n must be at least 1");
  const BinGeometry geo(cfg.bins);
  const auto sched = cfg.schedule();
  auto p = continuous::Params::prior(cfg.dim);
  Vec centers(cfg.dim);
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i - 1) / n;
    const auto k = sample_rows(rng, output_distribution(predictor, cfg, p, t));
    for (std::size_t d = 0; d < cfg.dim; ++d) centers[d] = geo.center(k[d]);
    const double a = sched.step_alpha(i, n);
    const Vec y = gaussian_sample(rng, centers, 1.0 / a);
    p = continuous::bayes_update(p, y, a);
  }
  const auto k = sample_rows(rng, output_distribution(predictor, cfg, p, 1.0));
  for (std::size_t d = 0; d < cfg.dim; ++d) centers[d] = geo.center(k[d]);
  return centers;
}

}  // namespace bfn::discretised
