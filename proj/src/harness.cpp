#include "bfn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bfn/continuous.hpp"
#include "bfn/discrete.hpp"
#include "bfn/discretised.hpp"
#include "bfn/mlp.hpp"
#include "bfn/model.hpp"
#include "bfn/oracle.hpp"
#include "bfn/training.hpp"

namespace bfn::harness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng stream(std::uint64_t seed, std::string_view id) { return Rng(seed).split(fnv1a(id)); }

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

PropertyReport make(std::string id, std::string group, std::string modality, std::string params,
                    std::string statistic, std::uint64_t seed) {
  PropertyReport r;
  r.id = std::move(id);
  r.group = std::move(group);
  r.modality = std::move(modality);
  r.params = std::move(params);
  r.statistic = std::move(statistic);
  r.seed = seed;
  return r;
}

// Running mean and variance (Welford).
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double se() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

Vec unclipped_masses(double mu, double sigma, int bins) {
  const discretised::BinGeometry geo(bins);
  Vec out(bins);
  for (int k = 0; k < bins; ++k)
    out[k] = normal_cdf((geo.right(k) - mu) / sigma) - normal_cdf((geo.left(k) - mu) / sigma);
  return out;
}

Categorical histogram(const Formulas& f, const discretised::GaussianParams& g, int bins) {
  Categorical out(g.mu.size(), bins);
  for (std::size_t d = 0; d < g.mu.size(); ++d) {
    const Vec m = f.bin_masses(g.mu[d], g.sigma[d], bins);
    std::copy(m.begin(), m.end(), out.row(d).begin());
  }
  return out;
}

// Composite trapezoid rule for E[f(z)], z ~ N(0,1), on [-10, 10]. Used where
// the integrand has sharp transitions that a Gauss rule resolves poorly.
GaussRule normal_trapezoid(int points) {
  GaussRule r;
  const double h = 20.0 / (points - 1);
  double total = 0.0;
  for (int j = 0; j < points; ++j) {
    const double z = -10.0 + h * j;
    const double w = (j == 0 || j == points - 1 ? 0.5 : 1.0) * normal_pdf(z) * h;
    r.nodes.push_back(z);
    r.weights.push_back(w);
    total += w;
  }
  for (double& w : r.weights) w /= total;
  return r;
}

}  // namespace

// ---- report -----------------------------------------------------------------

std::string PropertyReport::line() const {
  std::string s;
  s += "id=" + id;
  s += "\tgroup=" + group;
  s += "\tmodality=" + modality;
  s += "\tparams=" + params;
  s += "\tstatistic=" + statistic;
  s += "\tvalue=" + num(value);
  s += "\ttolerance=" + num(tolerance);
  s += std::string("\tpass=") + (pass ? "true" : "false");
  s += "\tsamples=" + std::to_string(samples);
  s += "\tseed=" + std::to_string(seed);
  s += "\tdetail=" + detail;
  return s;
}

std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::none: return "none";
    case Mutation::linf_weight: return "linf_weight";
    case Mutation::missing_n: return "missing_n";
    case Mutation::alpha_weighting: return "alpha_weighting";
    case Mutation::unclipped_cdf: return "unclipped_cdf";
  }
  return "?";
}

Mutation mutation_from_string(std::string_view name) {
  for (Mutation m : all_mutations())
    if (to_string(m) == name) return m;
  if (name == "none") return Mutation::none;
  throw std::invalid_argument("unknown mutation '" + std::string(name) + "'");
}

const std::vector<Mutation>& all_mutations() {
  static const std::vector<Mutation> v = {Mutation::linf_weight, Mutation::missing_n,
                                          Mutation::alpha_weighting, Mutation::unclipped_cdf};
  return v;
}

Formulas Formulas::correct() {
  Formulas f;
  f.linf_rate = [](const AccuracySchedule& s, double t) { return s.alpha(t); };
  f.step_accuracy = [](const AccuracySchedule& s, int i, int n) { return s.step_alpha(i, n); };
  f.ln_scale = [](int n) { return static_cast<double>(n); };
  f.bin_masses = [](double mu, double sigma, int bins) {
    return discretised::bin_masses(mu, sigma, bins);
  };
  return f;
}

Formulas Formulas::mutated(Mutation m) {
  Formulas f = correct();
  switch (m) {
    case Mutation::none: break;
    case Mutation::linf_weight:
      f.linf_rate = [](const AccuracySchedule& s, double t) { return 1.01 * s.alpha(t); };
      break;
    case Mutation::missing_n:
      f.ln_scale = [](int) { return 1.0; };
      break;
    case Mutation::alpha_weighting:
      // rate at the start of the step times its width
      f.step_accuracy = [](const AccuracySchedule& s, int i, int n) {
        return s.alpha(static_cast<double>(i - 1) / n) / n;
      };
      break;
    case Mutation::unclipped_cdf:
      f.bin_masses = unclipped_masses;
      break;
  }
  return f;
}

// ---- quadrature -------------------------------------------------------------

GaussRule gauss_hermite(int points) {
  if (points < 1 || points > 200) throw DomainError("gauss_hermite: 1..200 points");
  // Newton iteration on orthonormal Hermite polynomials (weight exp(-x^2)),
  // then rescaled to the standard normal.
  const int n = points;
  Vec x(n), w(n);
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -0.16667);
    else if (i == 1) z -= 1.14 * std::pow(n, 0.426) / z;
    else if (i == 2) z = 1.86 * z - 0.86 * x[0];
    else if (i == 3) z = 1.91 * z - 0.91 * x[1];
    else z = 2.0 * z - x[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
  }
  GaussRule r;
  double total = 0.0;
  for (double v : w) total += v;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(std::numbers::sqrt2 * x[i]);
    r.weights.push_back(w[i] / total);
  }
  return r;
}

double discretised_step_kl(std::span<const double> probs, double x, double alpha,
                           const GaussRule& rule) {
  const int K = static_cast<int>(probs.size());
  const discretised::BinGeometry geo(K);
  const double ra = std::sqrt(alpha);
  Vec terms(K);
  double kl = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double z = rule.nodes[q];
    for (int k = 0; k < K; ++k) {
      const double d = x - geo.center(k);
      terms[k] = probs[k] > 0.0 ? std::log(probs[k]) - 0.5 * alpha * d * d - ra * d * z : -kInf;
    }
    kl -= rule.weights[q] * log_sum_exp(terms);
  }
  return kl;
}

double discrete_step_kl(std::span<const double> probs, int x, double alpha,
                        const GaussRule& rule) {
  const int K = static_cast<int>(probs.size());
  const double s = std::sqrt(alpha * K);
  auto lp = [&](int k) { return probs[k] > 0.0 ? std::log(probs[k]) : -kInf; };
  // w_k = z_k - z_x for the other classes; the ratio depends only on them
  if (K == 2) {
    const int o = 1 - x;
    double kl = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double w = std::numbers::sqrt2 * rule.nodes[q];
      const double terms[2] = {lp(x), lp(o) - alpha * K + s * w};
      kl -= rule.weights[q] * log_sum_exp(terms);
    }
    return kl;
  }
  if (K == 3) {
    const int o1 = x == 0 ? 1 : 0;
    const int o2 = x == 2 ? 1 : 2;
    const double a = std::sqrt(0.5), b = std::sqrt(1.5);
    double kl = 0.0;
    for (std::size_t p = 0; p < rule.nodes.size(); ++p)
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double u1 = rule.nodes[p], u2 = rule.nodes[q];
        const double w1 = std::numbers::sqrt2 * u1, w2 = a * u1 + b * u2;
        const double terms[3] = {lp(x), lp(o1) - alpha * K + s * w1, lp(o2) - alpha * K + s * w2};
        kl -= rule.weights[p] * rule.weights[q] * log_sum_exp(terms);
      }
    return kl;
  }
  throw ContractError("discrete_step_kl: only K = 2 and K = 3 are supported");
}

// ---- multinomial construction ---------------------------------------------

FiniteMSimulator::FiniteMSimulator(int classes, std::uint64_t m, double omega)
    : k_(classes), m_(m), omega_(omega) {
  if (classes < 2) throw DomainError("finite-m: need K >= 2");
  if (m == 0) throw DomainError("finite-m: need m >= 1");
  if (!(omega > 0.0 && omega < 1.0)) throw DomainError("finite-m: omega must lie in (0,1)");
}

FiniteMSimulator FiniteMSimulator::from_accuracy(int classes, double alpha, std::uint64_t m) {
  if (!(alpha > 0.0)) throw DomainError("finite-m: alpha must be positive");
  return FiniteMSimulator(classes, m, std::sqrt(alpha / static_cast<double>(m)));
}

double FiniteMSimulator::log_xi() const { return std::log1p(omega_ * k_ / (1.0 - omega_)); }

Vec FiniteMSimulator::face_probs(int x) const {
  Vec a(k_, (1.0 - omega_) / k_);
  a[x] += omega_;
  return a;
}

std::vector<std::uint64_t> FiniteMSimulator::sample_counts(Rng& rng, int x) const {
  const Vec a = face_probs(x);
  std::vector<std::uint64_t> c(k_, 0);
  std::uint64_t left = m_;
  double mass = 1.0;
  for (int k = 0; k < k_ - 1 && left > 0; ++k) {
    const double p = std::clamp(a[k] / mass, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> bin(left, p);
    c[k] = bin(rng);
    left -= c[k];
    mass -= a[k];
  }
  c[k_ - 1] += left;
  return c;
}

Vec FiniteMSimulator::logits(std::span<const std::uint64_t> counts) const {
  const double L = log_xi();
  const double base = static_cast<double>(m_) / k_;
  Vec y(k_);
  for (int k = 0; k < k_; ++k) y[k] = (static_cast<double>(counts[k]) - base) * L;
  return y;
}

Vec FiniteMSimulator::mean(int x) const {
  const Vec a = face_probs(x);
  const double L = log_xi(), m = static_cast<double>(m_);
  Vec mu(k_);
  for (int k = 0; k < k_; ++k) mu[k] = (m * a[k] - m / k_) * L;
  return mu;
}

Vec FiniteMSimulator::covariance(int x) const {
  const Vec a = face_probs(x);
  const double L2 = log_xi() * log_xi(), m = static_cast<double>(m_);
  Vec c(k_ * k_);
  for (int j = 0; j < k_; ++j)
    for (int k = 0; k < k_; ++k) c[j * k_ + k] = m * ((j == k ? a[j] : 0.0) - a[j] * a[k]) * L2;
  return c;
}

Vec FiniteMSimulator::brute_force_posterior(std::span<const double> theta,
                                            std::span<const std::uint64_t> counts) const {
  Vec logp(k_);
  for (int k = 0; k < k_; ++k) {
    const Vec a = face_probs(k);
    double s = std::log(theta[k]);
    for (int j = 0; j < k_; ++j) s += static_cast<double>(counts[j]) * std::log(a[j]);
    logp[k] = s;
  }
  const double z = log_sum_exp(logp);
  for (double& v : logp) v = std::exp(v - z);
  return logp;
}

// ---- identities -------------------------------------------------------------

namespace {

Categorical random_simplex(Rng& rng, std::size_t dim, int classes) {
  Categorical c(dim, classes);
  for (std::size_t d = 0; d < dim; ++d) {
    double s = 0.0;
    for (auto& v : c.row(d)) s += (v = 0.01 + rng.uniform());
    for (auto& v : c.row(d)) v /= s;
  }
  return c;
}

}  // namespace

PropertyReport check_discrete_update_identity(std::uint64_t seed, int cases) {
  auto r = make("discrete_update_additivity", "identities", "discrete", "cases=" + std::to_string(cases),
                "max_abs_diff", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t D = 1 + rng.uniform_index(4);
    const int K = 2 + static_cast<int>(rng.uniform_index(7));
    const Categorical theta = random_simplex(rng, D, K);
    const double scale = log_uniform(rng, 0.1, 5.0);
    Vec ya(D * K), yb(D * K), yab(D * K);
    for (std::size_t j = 0; j < ya.size(); ++j) {
      ya[j] = scale * rng.normal();
      yb[j] = scale * rng.normal();
      yab[j] = ya[j] + yb[j];
    }
    const auto two = discrete::bayes_update(discrete::bayes_update(theta, ya), yb);
    const auto one = discrete::bayes_update(theta, yab);
    for (std::size_t j = 0; j < one.probs.size(); ++j)
      worst = std::max(worst, std::abs(two.probs[j] - one.probs[j]));
  }
  r.value = worst;
  r.tolerance = 1e-12;
  r.pass = worst <= r.tolerance;
  r.samples = cases;
  return r;
}

PropertyReport check_precision_additivity(std::uint64_t seed, int cases) {
  auto r = make("precision_additivity", "identities", "continuous", "cases=" + std::to_string(cases),
                "max_rel_diff", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    continuous::Params p{Vec{rng.normal()}, log_uniform(rng, 0.5, 100.0)};
    const double aa = log_uniform(rng, 1e-3, 1e3), ab = log_uniform(rng, 1e-3, 1e3);
    const Vec y{rng.normal()};
    const auto two = continuous::bayes_update(continuous::bayes_update(p, y, aa), y, ab);
    const auto one = continuous::bayes_update(p, y, aa + ab);
    worst = std::max(worst, rel_err(two.precision, one.precision));
  }
  r.value = worst;
  // the two sums may round differently in the last place
  r.tolerance = 1e-15;
  r.pass = worst <= r.tolerance;
  r.samples = cases;
  return r;
}

PropertyReport check_update_composition(std::uint64_t seed, int cases) {
  auto r = make("update_composition", "identities", "continuous", "cases=" + std::to_string(cases),
                "max_abs_diff", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t D = 1 + rng.uniform_index(4);
    continuous::Params p{Vec(D), log_uniform(rng, 0.5, 100.0)};
    for (double& v : p.mean) v = rng.uniform() * 2.0 - 1.0;
    const double aa = log_uniform(rng, 1e-2, 1e2), ab = log_uniform(rng, 1e-2, 1e2);
    Vec ya(D), yb(D), merged(D);
    for (std::size_t d = 0; d < D; ++d) {
      ya[d] = rng.normal();
      yb[d] = rng.normal();
      merged[d] = (aa * ya[d] + ab * yb[d]) / (aa + ab);
    }
    const auto two = continuous::bayes_update(continuous::bayes_update(p, ya, aa), yb, ab);
    const auto one = continuous::bayes_update(p, merged, aa + ab);
    for (std::size_t d = 0; d < D; ++d) worst = std::max(worst, std::abs(two.mean[d] - one.mean[d]));
  }
  r.value = worst;
  r.tolerance = 1e-12;
  r.pass = worst <= r.tolerance;
  r.samples = cases;
  return r;
}

PropertyReport check_finite_m_posterior(std::uint64_t seed, int cases) {
  auto r = make("finite_m_posterior", "identities", "discrete", "cases=" + std::to_string(cases),
                "max_abs_diff", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const int K = 2 + static_cast<int>(rng.uniform_index(5));
    const auto m = static_cast<std::uint64_t>(log_uniform(rng, 1.0, 1e4));
    const double omega = log_uniform(rng, 1e-3, 0.5);
    const FiniteMSimulator sim(K, m, omega);
    const int x = static_cast<int>(rng.uniform_index(K));
    const auto counts = sim.sample_counts(rng, x);
    const Categorical theta = random_simplex(rng, 1, K);
    const Vec brute = sim.brute_force_posterior(theta.probs, counts);
    const auto upd = discrete::bayes_update(theta, sim.logits(counts));
    for (int k = 0; k < K; ++k) worst = std::max(worst, std::abs(brute[k] - upd.probs[k]));
  }
  r.value = worst;
  r.tolerance = 1e-10;
  r.pass = worst <= r.tolerance;
  r.samples = cases;
  return r;
}

PropertyReport check_bin_mass_rows(std::uint64_t seed, int cases, const Formulas& f) {
  auto r = make("bin_mass_rows", "identities", "discretised", "cases=" + std::to_string(cases),
                "max_row_error", seed);
  Rng rng = stream(seed, r.id);
  const int bins[] = {2, 16, 256};
  double worst = 0.0;
  bool nonneg = true;
  for (int c = 0; c < cases; ++c) {
    const int K = bins[rng.uniform_index(3)];
    const double mu = rng.uniform() * 6.0 - 3.0;
    const double sigma = log_uniform(rng, 1e-4, 10.0);
    const Vec m = f.bin_masses(mu, sigma, K);
    double s = 0.0;
    for (double v : m) {
      s += v;
      nonneg = nonneg && v >= 0.0;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  r.value = worst;
  r.tolerance = 1e-9;
  r.pass = nonneg && worst <= r.tolerance;
  r.samples = cases;
  r.detail = nonneg ? "" : "negative mass";
  return r;
}

PropertyReport check_binary_sigmoid(std::uint64_t seed, int cases) {
  auto r = make("binary_sigmoid_softmax", "identities", "discrete", "cases=" + std::to_string(cases),
                "max_abs_diff", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t D = 1 + rng.uniform_index(4);
    Vec net(D);
    for (double& v : net) v = rng.uniform() * 60.0 - 30.0;
    const Categorical out = discrete::output_from_logits(net, D, 2);
    for (std::size_t d = 0; d < D; ++d) {
      const double pair[2] = {net[d], 0.0};
      const Vec p = softmax(pair);
      worst = std::max({worst, std::abs(p[0] - out.at(d, 0)), std::abs(p[1] - out.at(d, 1))});
    }
  }
  r.value = worst;
  r.tolerance = 1e-12;
  r.pass = worst <= r.tolerance;
  r.samples = cases;
  return r;
}

PropertyReport check_bin_centre_golden() {
  auto r = make("bin_centre_golden", "identities", "discretised", "bins=256;bin=109", "centre", 0);
  r.value = discretised::BinGeometry(256).center(109);
  r.tolerance = 0.0;
  r.pass = r.value == -0.14453125;
  r.samples = 1;
  r.detail = "expected=-0.14453125;bin is 0-based (the 110th bin)";
  return r;
}

PropertyReport check_quantise_round_trip() {
  auto r = make("quantise_round_trip", "identities", "discretised", "bins=2,16,256", "mismatches", 0);
  int bad = 0, total = 0;
  for (int K : {2, 16, 256}) {
    const discretised::BinGeometry geo(K);
    for (int k = 0; k < K; ++k) {
      const double c = geo.center(k);
      const auto q = discretised::quantise(std::span<const double>(&c, 1), K);
      bad += q.index[0] != k || q.centers[0] != c;
      ++total;
    }
  }
  r.value = bad;
  r.tolerance = 0.0;
  r.pass = bad == 0;
  r.samples = total;
  return r;
}

// ---- additivity and flow ------------------------------------------------------

PropertyReport check_additivity(Modality m, double alpha_a, double alpha_b, std::uint64_t trials,
                                std::uint64_t seed) {
  const std::string params = "alpha_a=" + short_num(alpha_a) + ";alpha_b=" + short_num(alpha_b);
  if (m == Modality::continuous) {
    auto r = make("additivity_continuous", "additivity", "continuous", params + ";D=1;x=0.9",
                  "max_rel_err_mean_var", seed);
    Rng rng = stream(seed, r.id);
    const Vec x{0.9};
    Moments two, one;
    double prec_err = 0.0;
    for (std::uint64_t j = 0; j < trials; ++j) {
      auto p = continuous::Params::prior(1);
      p = continuous::bayes_update(p, gaussian_sample(rng, x, 1.0 / alpha_a), alpha_a);
      p = continuous::bayes_update(p, gaussian_sample(rng, x, 1.0 / alpha_b), alpha_b);
      const auto q = continuous::bayes_update(continuous::Params::prior(1),
                                              gaussian_sample(rng, x, 1.0 / (alpha_a + alpha_b)),
                                              alpha_a + alpha_b);
      two.add(p.mean[0]);
      one.add(q.mean[0]);
      prec_err = std::max(prec_err, rel_err(p.precision, q.precision));
    }
    bool rejects_zero = false;
    try {
      continuous::bayes_update(continuous::Params::prior(1), x, 0.0);
    } catch (const DomainError&) {
      rejects_zero = true;
    }
    const double em = rel_err(two.mean, one.mean), ev = rel_err(two.variance(), one.variance());
    r.value = std::max(em, ev);
    r.tolerance = 0.01;
    r.pass = r.value < r.tolerance && prec_err <= 1e-15 && rejects_zero;
    r.samples = trials;
    r.detail = "mean_err=" + short_num(em) + ";var_err=" + short_num(ev) +
               ";precision_rel_diff=" + short_num(prec_err) +
               ";zero_alpha_rejected=" + (rejects_zero ? "yes" : "no");
    return r;
  }
  if (m != Modality::discrete) throw ContractError("additivity: continuous or discrete only");
  auto r = make("additivity_discrete", "additivity", "discrete", params + ";K=3;D=1;x=0",
                "max_rel_err_class_mean", seed);
  Rng rng = stream(seed, r.id);
  const int K = 3;
  const std::vector<int> x{0};
  std::vector<Moments> two(K), one(K);
  for (std::uint64_t j = 0; j < trials; ++j) {
    auto p = discrete::prior(1, K);
    p = discrete::bayes_update(p, discrete::sender_sample(rng, x, alpha_a, K));
    p = discrete::bayes_update(p, discrete::sender_sample(rng, x, alpha_b, K));
    const auto q = discrete::bayes_update(discrete::prior(1, K),
                                          discrete::sender_sample(rng, x, alpha_a + alpha_b, K));
    for (int k = 0; k < K; ++k) {
      two[k].add(p.probs[k]);
      one[k].add(q.probs[k]);
    }
  }
  double worst = 0.0;
  std::string detail;
  for (int k = 0; k < K; ++k) {
    const double e = rel_err(two[k].mean, one[k].mean);
    worst = std::max(worst, e);
    detail += (k ? ";" : "") + std::string("class") + std::to_string(k) + "=" + short_num(e);
  }
  r.value = worst;
  r.tolerance = 0.015;
  r.pass = worst < r.tolerance;
  r.samples = trials;
  r.detail = detail;
  return r;
}

PropertyReport check_flow_equivalence(Modality m, int n, double t, std::uint64_t trials,
                                      std::uint64_t seed) {
  const std::string params = "n=" + std::to_string(n) + ";t=" + short_num(t);
  if (m == Modality::continuous) {
    auto r = make("flow_continuous", "flow", "continuous", params + ";sigma1=0.02;D=1;x=0.9",
                  "max_rel_err_mean_var", seed);
    Rng rng = stream(seed, r.id);
    continuous::Config cfg;
    cfg.sigma1 = 0.02;
    const auto sched = cfg.schedule();
    const Vec x{0.9};
    Moments seq, flow;
    double prec_err = 0.0;
    for (std::uint64_t j = 0; j < trials; ++j) {
      auto p = continuous::Params::prior(1);
      for (int i = 1; i <= n; ++i) {
        const double a = sched.beta(t * i / n) - sched.beta(t * (i - 1) / n);
        p = continuous::bayes_update(p, gaussian_sample(rng, x, 1.0 / a), a);
      }
      const auto q = continuous::flow_sample(rng, cfg, x, t);
      seq.add(p.mean[0]);
      flow.add(q.mean[0]);
      prec_err = std::max(prec_err, rel_err(p.precision, q.precision));
    }
    const double em = rel_err(seq.mean, flow.mean), ev = rel_err(seq.variance(), flow.variance());
    r.value = std::max(em, ev);
    r.tolerance = 0.01;
    r.pass = r.value < r.tolerance && prec_err <= 1e-12;
    r.samples = trials;
    r.detail = "mean_err=" + short_num(em) + ";var_err=" + short_num(ev) +
               ";precision_rel_diff=" + short_num(prec_err);
    return r;
  }
  if (m != Modality::discrete) throw ContractError("flow: continuous or discrete only");
  auto r = make("flow_discrete", "flow", "discrete", params + ";K=3;beta1=3;D=1;x=0",
                "max_rel_err_class_mean", seed);
  Rng rng = stream(seed, r.id);
  discrete::Config cfg;
  cfg.classes = 3;
  cfg.beta1 = 3.0;
  const auto sched = cfg.schedule();
  const std::vector<int> x{0};
  std::vector<Moments> seq(3), flow(3);
  for (std::uint64_t j = 0; j < trials; ++j) {
    auto p = discrete::prior(1, 3);
    for (int i = 1; i <= n; ++i) {
      const double a = sched.beta(t * i / n) - sched.beta(t * (i - 1) / n);
      p = discrete::bayes_update(p, discrete::sender_sample(rng, x, a, 3));
    }
    const auto q = discrete::flow_sample(rng, cfg, x, t);
    for (int k = 0; k < 3; ++k) {
      seq[k].add(p.probs[k]);
      flow[k].add(q.probs[k]);
    }
  }
  double worst = 0.0;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const double e = rel_err(seq[k].mean, flow[k].mean);
    worst = std::max(worst, e);
    detail += (k ? ";" : "") + std::string("class") + std::to_string(k) + "=" + short_num(e);
  }
  r.value = worst;
  r.tolerance = 0.015;
  r.pass = worst < r.tolerance;
  r.samples = trials;
  r.detail = detail;
  return r;
}

PropertyReport check_flow_prior(std::uint64_t seed) {
  auto r = make("flow_prior_at_zero", "flow", "-", "t=0", "mismatches", seed);
  Rng rng = stream(seed, r.id);
  int bad = 0;
  continuous::Config cc;
  cc.dim = 3;
  const Vec x{0.1, -0.5, 0.9};
  const Rng before = rng;
  const auto p = continuous::flow_sample(rng, cc, x, 0.0);
  bad += p.precision != 1.0;
  for (double v : p.mean) bad += v != 0.0;
  discrete::Config dc;
  dc.classes = 4;
  dc.dim = 2;
  const std::vector<int> xi{1, 3};
  const auto q = discrete::flow_sample(rng, dc, xi, 0.0);
  for (double v : q.probs) bad += v != 0.25;
  bad += !(rng == before);
  r.value = bad;
  r.tolerance = 0.0;
  r.pass = bad == 0;
  r.samples = 1;
  return r;
}

// ---- KL -------------------------------------------------------------------------

PropertyReport check_kl_continuous(std::uint64_t seed, int configs, std::uint64_t samples) {
  auto r = make("kl_continuous_closed_form", "kl", "continuous",
                "configs=" + std::to_string(configs) + ";D=1", "max_abs_z", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  for (int c = 0; c < configs; ++c) {
    const double x = rng.uniform() * 2.0 - 1.0, xh = rng.uniform() * 2.0 - 1.0;
    const double alpha = log_uniform(rng, 0.1, 100.0);
    const double var = 1.0 / alpha;
    Moments mc;
    for (std::uint64_t j = 0; j < samples; ++j) {
      const double y = x + std::sqrt(var) * rng.normal();
      mc.add(log_gaussian_pdf(y, x, var) - log_gaussian_pdf(y, xh, var));
    }
    const double closed = 0.5 * alpha * (x - xh) * (x - xh);
    const double z = (mc.mean - closed) / mc.se();
    worst = std::max(worst, std::abs(z));
    r.detail += (c ? ";" : "") + std::string("mc=") + short_num(mc.mean) + ",closed=" + short_num(closed);
  }
  r.value = worst;
  r.tolerance = 3.0;
  r.pass = worst <= r.tolerance;
  r.samples = samples * configs;
  return r;
}

PropertyReport check_kl_mixture(Modality m, std::uint64_t seed, std::uint64_t samples) {
  const bool disc = m == Modality::discretised;
  if (!disc && m != Modality::discrete) throw ContractError("kl mixture: discretised or discrete");
  auto r = make(disc ? "kl_discretised_quadrature" : "kl_discrete_quadrature", "kl",
                std::string(to_string(m)), "K=2;D=1;configs=3", "max_abs_z", seed);
  Rng rng = stream(seed, r.id);
  const GaussRule rule = gauss_hermite(64);
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    Categorical out(1, 2);
    const double p0 = 0.05 + 0.9 * rng.uniform();
    out.probs = {p0, 1.0 - p0};
    const int xi = static_cast<int>(rng.uniform_index(2));
    const double alpha = log_uniform(rng, 0.05, disc ? 50.0 : 5.0);
    Moments mc;
    double quad;
    if (disc) {
      const double x = discretised::BinGeometry(2).center(xi);
      for (std::uint64_t j = 0; j < samples; ++j)
        mc.add(discretised::mixture_log_ratio(rng, out, std::span<const double>(&x, 1), alpha));
      quad = discretised_step_kl(out.probs, x, alpha, rule);
    } else {
      for (std::uint64_t j = 0; j < samples; ++j)
        mc.add(discrete::mixture_log_ratio(rng, out, std::span<const int>(&xi, 1), alpha));
      quad = discrete_step_kl(out.probs, xi, alpha, rule);
    }
    const double z = (mc.mean - quad) / mc.se();
    worst = std::max(worst, std::abs(z));
    r.detail += (c ? ";" : "") + std::string("mc=") + short_num(mc.mean) + ",quad=" + short_num(quad);
  }
  r.value = worst;
  r.tolerance = 3.0;
  r.pass = worst <= r.tolerance;
  r.samples = 3 * samples;
  return r;
}

PropertyReport check_kl_zero(std::uint64_t seed) {
  auto r = make("kl_zero_at_data", "kl", "-", "draws=1000", "max_abs_log_ratio", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  for (int j = 0; j < 1000; ++j) {
    const double alpha = log_uniform(rng, 0.01, 1000.0);
    const double x = rng.uniform() * 2.0 - 1.0;
    const double y = x + rng.normal() / std::sqrt(alpha);
    worst = std::max(worst, std::abs(log_gaussian_pdf(y, x, 1.0 / alpha) -
                                     log_gaussian_pdf(y, x, 1.0 / alpha)));

    const int K = 16;
    const int k = static_cast<int>(rng.uniform_index(K));
    const double c = discretised::BinGeometry(K).center(k);
    Categorical hist(1, K);
    hist.probs[k] = 1.0;
    worst = std::max(worst, std::abs(discretised::mixture_log_ratio(
                                rng, hist, std::span<const double>(&c, 1), alpha)));

    const int C = 2 + static_cast<int>(rng.uniform_index(5));
    const int xi = static_cast<int>(rng.uniform_index(C));
    Categorical onehot(1, C);
    onehot.probs[xi] = 1.0;
    worst = std::max(worst, std::abs(discrete::mixture_log_ratio(
                                rng, onehot, std::span<const int>(&xi, 1), alpha)));
  }
  r.value = worst;
  r.tolerance = 0.0;
  r.pass = worst == 0.0;
  r.samples = 3000;
  return r;
}

PropertyReport check_kl_ordering(std::uint64_t seed, int configs, std::uint64_t samples) {
  auto r = make("kl_discretised_below_continuous", "kl", "discretised",
                "K=16;D=1;configs=" + std::to_string(configs), "max_z_excess", seed);
  Rng rng = stream(seed, r.id);
  const int K = 16;
  const discretised::BinGeometry geo(K);
  double worst = -kInf;
  for (int c = 0; c < configs; ++c) {
    const int k = 1 + static_cast<int>(rng.uniform_index(K - 2));
    const double x = geo.center(k);
    const double offset = (0.15 + 0.15 * rng.uniform()) * geo.width() * (rng.uniform() < 0.5 ? -1 : 1);
    const double mu = x + offset, sigma = geo.width() / 12.0;
    const double alpha = log_uniform(rng, 20.0, 400.0);
    Categorical out(1, K);
    out.probs = discretised::bin_masses(mu, sigma, K);
    Moments mc;
    for (std::uint64_t j = 0; j < samples; ++j)
      mc.add(discretised::mixture_log_ratio(rng, out, std::span<const double>(&x, 1), alpha));
    const double cts = 0.5 * alpha * offset * offset;
    worst = std::max(worst, (mc.mean - cts) / mc.se());
    r.detail += (c ? ";" : "") + std::string("discretised=") + short_num(mc.mean) +
                ",continuous=" + short_num(cts) + ",bin_mass=" + short_num(out.probs[k]);
  }
  r.value = worst;
  r.tolerance = 3.0;
  r.pass = worst <= r.tolerance;
  r.samples = samples * configs;
  return r;
}

// ---- convergence ------------------------------------------------------------------

namespace {

// A fixed scenario (data item, imperfect predictor) for one modality, with
// the flow written as a deterministic function of its noise so that the
// n-step and continuous-time integrands can share draws.
struct Scenario {
  std::string params;
  double tolerance = 0.01;
  std::uint64_t pairs = 0;     // per n
  std::uint64_t inf_draws = 0;  // for the continuous-time loss itself
  std::size_t noise_width = 0;
  std::function<double(const Vec& z, int i, int n)> step;
  std::function<double(const Vec& z, double t)> cts;
};

Scenario continuous_scenario(const Formulas& f) {
  continuous::Config cfg;
  cfg.sigma1 = 0.02;
  auto oracle = std::make_shared<continuous::BayesOracle>(cfg, std::vector<Vec>{{-0.6}, {0.2}, {0.7}});
  const double x = 0.3;
  const auto sched = cfg.schedule();
  auto err2 = [=](const Vec& z, double t) {
    const double g = sched.gamma(t);
    continuous::Params p{Vec{g * x + std::sqrt(g * (1.0 - g)) * z[0]}, 1.0 + sched.beta(t)};
    const Vec xh = continuous::output_prediction(*oracle, cfg, p, t);
    return (x - xh[0]) * (x - xh[0]);
  };
  Scenario s;
  s.params = "sigma1=0.02;D=1;data=-0.6,0.2,0.7;x=0.3";
  s.tolerance = 0.005;
  s.pairs = 200000;
  s.inf_draws = 1 << 18;
  s.noise_width = 1;
  s.step = [=](const Vec& z, int i, int n) {
    const double a = f.step_accuracy(sched, i, n);
    return f.ln_scale(n) * 0.5 * a * err2(z, static_cast<double>(i - 1) / n);
  };
  s.cts = [=](const Vec& z, double t) { return 0.5 * f.linf_rate(sched, t) * err2(z, t); };
  return s;
}

Scenario discretised_scenario(const Formulas& f) {
  discretised::Config cfg;
  cfg.sigma1 = std::sqrt(0.001);
  cfg.bins = 16;
  const discretised::BinGeometry geo(16);
  auto oracle = std::make_shared<discretised::BayesOracle>(
      cfg, std::vector<Vec>{{geo.center(2)}, {geo.center(7)}, {geo.center(11)}}, 0.01);
  const double x = geo.center(7);
  const auto sched = cfg.schedule();
  const auto rule = std::make_shared<GaussRule>(gauss_hermite(48));
  auto hist = [=](const Vec& z, double t) {
    const double g = sched.gamma(t);
    const Vec mu{g * x + std::sqrt(g * (1.0 - g)) * z[0]};
    Vec net;
    if (t >= cfg.t_min) net = checked_forward(*oracle, mu, t);
    return histogram(f, discretised::output_gaussian(cfg, mu, t, net), cfg.bins);
  };
  Scenario s;
  s.params = "K=16;sigma1=sqrt(0.001);D=1;data=bins 2,7,11;x=bin 7;sigma_floor=0.01";
  s.tolerance = 0.01;
  s.pairs = 400000;
  s.inf_draws = 1 << 17;
  s.noise_width = 1;
  s.step = [=](const Vec& z, int i, int n) {
    const double a = f.step_accuracy(sched, i, n);
    const Categorical out = hist(z, static_cast<double>(i - 1) / n);
    return f.ln_scale(n) * discretised_step_kl(out.probs, x, a, *rule);
  };
  s.cts = [=](const Vec& z, double t) {
    const double kh = discretised::k_hat(hist(z, t))[0];
    return 0.5 * f.linf_rate(sched, t) * (x - kh) * (x - kh);
  };
  return s;
}

Scenario discrete_scenario(const Formulas& f) {
  discrete::Config cfg;
  cfg.classes = 3;
  cfg.dim = 2;
  cfg.beta1 = 3.0;
  auto oracle = std::make_shared<discrete::BayesOracle>(
      cfg, std::vector<std::vector<int>>{{0, 1}, {1, 2}, {2, 0}});
  const std::vector<int> x{0, 1};
  const auto sched = cfg.schedule();
  const auto rule = std::make_shared<GaussRule>(gauss_hermite(16));
  auto out = [=](const Vec& z, double t) {
    const double b = sched.beta(t);
    discrete::Params theta = discrete::prior(2, 3);
    if (b > 0.0) {
      Vec y = discrete::sender_mean(x, b, 3);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] += std::sqrt(b * 3) * z[j];
      theta = discrete::bayes_update(discrete::prior(2, 3), y);
    }
    return discrete::output_distribution(*oracle, cfg, theta, t);
  };
  Scenario s;
  s.params = "K=3;beta1=3;D=2;data=(0,1),(1,2),(2,0);x=(0,1)";
  s.tolerance = 0.01;
  s.pairs = 50000;
  s.inf_draws = 1 << 17;
  s.noise_width = 6;
  s.step = [=](const Vec& z, int i, int n) {
    const double a = f.step_accuracy(sched, i, n);
    const Categorical p = out(z, static_cast<double>(i - 1) / n);
    double kl = 0.0;
    for (std::size_t d = 0; d < 2; ++d) kl += discrete_step_kl(p.row(d), x[d], a, *rule);
    return f.ln_scale(n) * kl;
  };
  s.cts = [=](const Vec& z, double t) {
    const Vec eh = discrete::e_hat(out(z, t));
    const Vec ex = discrete::one_hot(x, 3);
    double se = 0.0;
    for (std::size_t j = 0; j < ex.size(); ++j) se += (ex[j] - eh[j]) * (ex[j] - eh[j]);
    return 3 * 0.5 * f.linf_rate(sched, t) * se;
  };
  return s;
}

Vec draw_noise(Rng& rng, std::size_t width) {
  Vec z(width);
  for (double& v : z) v = rng.normal();
  return z;
}

}  // namespace

PropertyReport check_loss_convergence(Modality m, const std::vector<int>& n_values,
                                      std::uint64_t seed, const Formulas& f) {
  if (n_values.empty()) throw std::invalid_argument("convergence: empty n list");
  Scenario s = m == Modality::continuous    ? continuous_scenario(f)
               : m == Modality::discretised ? discretised_scenario(f)
                                            : discrete_scenario(f);
  std::string ns;
  for (int n : n_values) ns += (ns.empty() ? "" : ",") + std::to_string(n);
  auto r = make("convergence_" + std::string(to_string(m)), "convergence", std::string(to_string(m)),
                s.params + ";n=" + ns, "final_rel_gap", seed);
  Rng rng = stream(seed, r.id);

  // continuous-time loss, stratified over t
  Moments inf;
  {
    Rng g = rng.split(0);
    for (std::uint64_t j = 0; j < s.inf_draws; ++j) {
      const double t = (static_cast<double>(j) + g.uniform()) / static_cast<double>(s.inf_draws);
      inf.add(s.cts(draw_noise(g, s.noise_width), t));
    }
  }
  std::uint64_t used = s.inf_draws;

  // Ln - Linf per n: stratum i pairs the step at t_{i-1} with a uniform t in
  // [t_{i-1}, t_i) under the same flow noise
  std::vector<double> gaps;
  std::string detail = "linf=" + short_num(inf.mean);
  for (std::size_t q = 0; q < n_values.size(); ++q) {
    const int n = n_values[q];
    Rng g = rng.split(q + 1);
    const std::uint64_t per = (s.pairs + n - 1) / n;
    double mean = 0.0, var = 0.0;
    for (int i = 1; i <= n; ++i) {
      Moments d;
      for (std::uint64_t j = 0; j < per; ++j) {
        const Vec z = draw_noise(g, s.noise_width);
        const double t = (i - 1 + g.uniform()) / n;
        d.add(s.step(z, i, n) - s.cts(z, t));
      }
      mean += d.mean / n;
      var += d.variance() / static_cast<double>(per) / (static_cast<double>(n) * n);
    }
    used += per * n;
    gaps.push_back(std::abs(mean));
    detail += ";n=" + std::to_string(n) + ":gap=" + short_num(mean) + ",se=" + short_num(std::sqrt(var));
  }
  bool decreasing = true;
  for (std::size_t q = 1; q < gaps.size(); ++q) decreasing = decreasing && gaps[q] < gaps[q - 1];
  r.value = gaps.back() / inf.mean;
  r.tolerance = s.tolerance;
  r.pass = decreasing && r.value < r.tolerance;
  r.samples = used;
  r.detail = detail + (decreasing ? "" : ";not decreasing");
  return r;
}

PropertyReport check_loss_estimators(Modality m, std::uint64_t seed) {
  const int n = 16;
  const std::uint64_t draws = 1000000;
  const GaussRule flow = normal_trapezoid(2001);
  const int t_points = 1024;
  auto r = make("estimators_" + std::string(to_string(m)), "convergence", std::string(to_string(m)),
                "n=16;D=1", "", seed);
  Rng rng = stream(seed, r.id);
  Moments ln, cts;
  double ln_quad = 0.0, inf_quad = 0.0;

  if (m == Modality::continuous) {
    continuous::Config cfg;
    cfg.sigma1 = 0.02;
    const continuous::BayesOracle oracle(cfg, {{-0.6}, {0.2}, {0.7}});
    const Vec x{0.3};
    const auto sched = cfg.schedule();
    auto e2 = [&](double t) {
      double acc = 0.0;
      const double g = sched.gamma(t);
      for (std::size_t q = 0; q < flow.nodes.size(); ++q) {
        continuous::Params p{Vec{g * x[0] + std::sqrt(g * (1 - g)) * flow.nodes[q]}, 1.0 + sched.beta(t)};
        const double e = x[0] - continuous::output_prediction(oracle, cfg, p, t)[0];
        acc += flow.weights[q] * e * e;
      }
      return acc;
    };
    for (int i = 1; i <= n; ++i) ln_quad += 0.5 * sched.step_alpha(i, n) * e2((i - 1.0) / n);
    for (int j = 0; j < t_points; ++j) {
      const double t = (j + 0.5) / t_points;
      inf_quad += 0.5 * sched.alpha(t) * e2(t) / t_points;
    }
    for (std::uint64_t j = 0; j < draws; ++j) {
      ln.add(continuous::loss_n_step(rng, oracle, cfg, x, n));
      cts.add(continuous::loss_cts_time(rng, oracle, cfg, x));
    }
    r.statistic = "max_rel_err";
    const double a = rel_err(ln.mean, ln_quad), b = rel_err(cts.mean, inf_quad);
    r.value = std::max(a, b);
    r.tolerance = 0.01;
    r.params += ";sigma1=0.02;data=-0.6,0.2,0.7;x=0.3";
  } else if (m == Modality::discretised) {
    discretised::Config cfg;
    cfg.sigma1 = std::sqrt(0.001);
    cfg.bins = 16;
    const discretised::BinGeometry geo(16);
    const discretised::BayesOracle oracle(cfg, {{geo.center(2)}, {geo.center(7)}, {geo.center(11)}}, 0.01);
    const Vec x{geo.center(7)};
    const auto sched = cfg.schedule();
    const GaussRule sender = gauss_hermite(48);
    auto over_flow = [&](double t, auto&& fn) {
      double acc = 0.0;
      const double g = sched.gamma(t);
      for (std::size_t q = 0; q < flow.nodes.size(); ++q) {
        continuous::Params p{Vec{g * x[0] + std::sqrt(g * (1 - g)) * flow.nodes[q]}, 1.0 + sched.beta(t)};
        acc += flow.weights[q] * fn(discretised::output_distribution(oracle, cfg, p, t));
      }
      return acc;
    };
    for (int i = 1; i <= n; ++i) {
      const double a = sched.step_alpha(i, n);
      ln_quad += over_flow((i - 1.0) / n, [&](const Categorical& o) {
        return discretised_step_kl(o.probs, x[0], a, sender);
      });
    }
    for (int j = 0; j < t_points; ++j) {
      const double t = (j + 0.5) / t_points;
      inf_quad += 0.5 * sched.alpha(t) / t_points * over_flow(t, [&](const Categorical& o) {
        const double e = x[0] - discretised::k_hat(o)[0];
        return e * e;
      });
    }
    for (std::uint64_t j = 0; j < draws; ++j) {
      ln.add(discretised::loss_n_step(rng, oracle, cfg, x, n));
      cts.add(discretised::loss_cts_time(rng, oracle, cfg, x));
    }
    r.statistic = "max_abs_z";
    r.value = std::max(std::abs(ln.mean - ln_quad) / ln.se(), std::abs(cts.mean - inf_quad) / cts.se());
    r.tolerance = 3.0;
    r.params += ";K=16;sigma1=sqrt(0.001);data=bins 2,7,11;x=bin 7";
  } else {
    discrete::Config cfg;
    cfg.classes = 2;
    cfg.beta1 = 3.0;
    const discrete::BayesOracle oracle(cfg, {{0}, {0}, {1}});
    const std::vector<int> x{1};
    const auto sched = cfg.schedule();
    const GaussRule sender = gauss_hermite(48);
    // theta_0 = sigmoid(y_0 - y_1), y_0 - y_1 ~ N(-2 beta, 4 beta) for x = 1
    auto over_flow = [&](double t, auto&& fn) {
      const double b = sched.beta(t);
      if (b == 0.0) return fn(discrete::output_distribution(oracle, cfg, discrete::prior(1, 2), t));
      double acc = 0.0;
      for (std::size_t q = 0; q < flow.nodes.size(); ++q) {
        const double d = -2.0 * b + 2.0 * std::sqrt(b) * flow.nodes[q];
        discrete::Params theta(1, 2);
        theta.probs = {sigmoid(d), sigmoid(-d)};
        acc += flow.weights[q] * fn(discrete::output_distribution(oracle, cfg, theta, t));
      }
      return acc;
    };
    for (int i = 1; i <= n; ++i) {
      const double a = sched.step_alpha(i, n);
      ln_quad += over_flow((i - 1.0) / n, [&](const Categorical& o) {
        return discrete_step_kl(o.probs, x[0], a, sender);
      });
    }
    for (int j = 0; j < t_points; ++j) {
      const double t = (j + 0.5) / t_points;
      inf_quad += 2 * 0.5 * sched.alpha(t) / t_points * over_flow(t, [&](const Categorical& o) {
        const double e = 1.0 - o.probs[1];
        return 2.0 * e * e;
      });
    }
    for (std::uint64_t j = 0; j < draws; ++j) {
      ln.add(discrete::loss_n_step(rng, oracle, cfg, x, n));
      cts.add(discrete::loss_cts_time(rng, oracle, cfg, x));
    }
    r.statistic = "max_abs_z";
    r.value = std::max(std::abs(ln.mean - ln_quad) / ln.se(), std::abs(cts.mean - inf_quad) / cts.se());
    r.tolerance = 3.0;
    r.params += ";K=2;beta1=3;data=0,0,1;x=1";
  }
  r.pass = r.value <= r.tolerance;
  r.samples = 2 * draws;
  r.detail = "ln_mc=" + short_num(ln.mean) + ",se=" + short_num(ln.se()) + ",quad=" + num(ln_quad) +
             ";linf_mc=" + short_num(cts.mean) + ",se=" + short_num(cts.se()) + ",quad=" + num(inf_quad);
  return r;
}

PropertyReport check_perfect_predictor(std::uint64_t seed) {
  auto r = make("perfect_predictor_zero_loss", "convergence", "-",
                "continuous x=0 D=1;discrete K=3 D=2;n=1,4,16,64,256", "max_abs_loss", seed);
  Rng rng = stream(seed, r.id);
  double worst = 0.0;
  std::uint64_t used = 0;
  continuous::Config cc;
  const Vec xc{0.0};
  const auto co = continuous::single_datum_oracle(cc, xc);
  discrete::Config dc;
  dc.classes = 3;
  dc.dim = 2;
  const std::vector<int> xd{2, 0};
  const auto dor = discrete::single_datum_oracle(dc, xd);
  for (int n : {1, 4, 16, 64, 256})
    for (int j = 0; j < 500; ++j) {
      worst = std::max(worst, std::abs(continuous::loss_n_step(rng, *co, cc, xc, n)));
      worst = std::max(worst, std::abs(discrete::loss_n_step(rng, *dor, dc, xd, n)));
      used += 2;
    }
  for (int j = 0; j < 500; ++j) {
    worst = std::max(worst, std::abs(continuous::loss_cts_time(rng, *co, cc, xc)));
    worst = std::max(worst, std::abs(discrete::loss_cts_time(rng, *dor, dc, xd)));
    used += 2;
  }
  r.value = worst;
  r.tolerance = 1e-9;
  r.pass = worst <= r.tolerance;
  r.samples = used;
  return r;
}

// ---- finite m -------------------------------------------------------------------

PropertyReport check_finite_m_limit(int classes, double alpha,
                                    const std::vector<std::uint64_t>& m_values,
                                    std::uint64_t trials, std::uint64_t seed) {
  if (m_values.empty()) throw std::invalid_argument("finite-m: empty m list");
  std::string ms;
  for (auto m : m_values) ms += (ms.empty() ? "" : ",") + std::to_string(m);
  auto r = make("finite_m_K" + std::to_string(classes) + "_alpha" + short_num(alpha), "finite_m",
                "discrete", "K=" + std::to_string(classes) + ";alpha=" + short_num(alpha) + ";m=" + ms,
                "final_max_rel_err", seed);
  Rng rng = stream(seed, r.id);
  const int K = classes, x = 0;
  // Gaussian sender with the all-ones direction removed
  Vec target_mean(K, -alpha);
  target_mean[x] = alpha * (K - 1);
  auto target_cov = [&](int j, int k) { return alpha * ((j == k ? K : 0) - 1); };

  std::vector<double> exact_mean_err, exact_var_err;
  double sim_z = 0.0, cov_err = 0.0;
  std::string detail;
  for (std::size_t q = 0; q < m_values.size(); ++q) {
    const auto sim = FiniteMSimulator::from_accuracy(K, alpha, m_values[q]);
    const Vec mu = sim.mean(x), cov = sim.covariance(x);
    double em = 0.0, ev = 0.0, ec = 0.0;
    for (int k = 0; k < K; ++k) {
      em = std::max(em, rel_err(mu[k], target_mean[k]));
      ev = std::max(ev, rel_err(cov[k * K + k], target_cov(k, k)));
      for (int j = 0; j < K; ++j)
        if (j != k) ec = std::max(ec, rel_err(cov[j * K + k], target_cov(j, k)));
    }
    exact_mean_err.push_back(em);
    exact_var_err.push_back(ev);

    Rng g = rng.split(q);
    std::vector<Moments> ys(K);
    for (std::uint64_t j = 0; j < trials; ++j) {
      const Vec y = sim.logits(sim.sample_counts(g, x));
      for (int k = 0; k < K; ++k) ys[k].add(y[k]);
    }
    // simulation against the exact moments, in standard errors
    double sz = 0.0;
    for (int k = 0; k < K; ++k) {
      const double var_se = cov[k * K + k] * std::sqrt(2.0 / static_cast<double>(trials - 1));
      sz = std::max({sz, std::abs(ys[k].mean - mu[k]) / ys[k].se(),
                     std::abs(ys[k].variance() - cov[k * K + k]) / var_se});
    }
    sim_z = std::max(sim_z, sz);
    if (q + 1 == m_values.size()) cov_err = ec;
    detail += (q ? ";" : "") + std::string("m=") + std::to_string(m_values[q]) +
              ":omega=" + short_num(sim.omega()) + ",mean=" + short_num(em) + ",var=" + short_num(ev) +
              ",cov=" + short_num(ec) + ",sim_z=" + short_num(sz);
  }
  bool decreasing = true;
  for (std::size_t q = 1; q < m_values.size(); ++q)
    decreasing = decreasing && exact_mean_err[q] < exact_mean_err[q - 1] &&
                 exact_var_err[q] < exact_var_err[q - 1];
  const double mean_tol = 0.01, var_tol = 0.03, z_tol = 4.0;
  const double fm = exact_mean_err.back(), fv = exact_var_err.back();
  // value normalised so that 1 is the boundary of either tolerance
  r.value = std::max(fm / mean_tol, fv / var_tol);
  r.tolerance = 1.0;
  r.pass = decreasing && fm < mean_tol && fv < var_tol && sim_z <= z_tol;
  r.samples = trials * m_values.size();
  r.detail = detail + ";final_mean_err=" + short_num(fm) + "(tol 0.01);final_var_err=" + short_num(fv) +
             "(tol 0.03);final_offdiag_err=" + short_num(cov_err) + ";max_sim_z=" + short_num(sim_z) +
             "(tol 4)" + (decreasing ? "" : ";not decreasing");
  return r;
}

// ---- schedule ---------------------------------------------------------------------

namespace {

std::vector<AccuracySchedule> test_schedules() {
  return {AccuracySchedule::continuous_sigma(0.001), AccuracySchedule::continuous_sigma(std::sqrt(0.001)),
          AccuracySchedule::continuous_sigma(0.02), AccuracySchedule::discrete_quadratic(3.0),
          AccuracySchedule::discrete_quadratic(0.75)};
}

}  // namespace

PropertyReport check_schedule_telescoping(const Formulas& f) {
  auto r = make("schedule_telescoping", "schedule", "-",
                "sigma1=0.001,sqrt(0.001),0.02;beta1=3,0.75;n=1,7,64,1000", "max_rel_err", 0);
  double worst = 0.0;
  for (const auto& s : test_schedules())
    for (int n : {1, 7, 64, 1000}) {
      double sum = 0.0;
      for (int i = 1; i <= n; ++i) sum += f.step_accuracy(s, i, n);
      worst = std::max(worst, rel_err(sum, s.beta(1.0)));
    }
  r.value = worst;
  r.tolerance = 1e-10;
  r.pass = worst <= r.tolerance;
  r.samples = 20;
  return r;
}

PropertyReport check_schedule_derivative() {
  auto r = make("schedule_derivative", "schedule", "-", "h=1e-6;t=0.1,0.37,0.9", "max_rel_err", 0);
  const double h = 1e-6;
  double worst = 0.0;
  for (const auto& s : test_schedules())
    for (double t : {0.1, 0.37, 0.9}) {
      const double fd = (s.beta(t + h) - s.beta(t - h)) / (2 * h);
      worst = std::max(worst, rel_err(fd, s.alpha(t)));
    }
  r.value = worst;
  r.tolerance = 1e-6;
  r.pass = worst < r.tolerance;
  r.samples = 15;
  return r;
}

PropertyReport check_schedule_monotone() {
  auto r = make("schedule_monotone", "schedule", "-", "grid=1001", "violations", 0);
  int bad = 0;
  for (const auto& s : test_schedules()) {
    bad += s.beta(0.0) != 0.0;
    double prev = s.beta(0.0);
    for (int j = 1; j <= 1000; ++j) {
      const double t = j / 1000.0, b = s.beta(t);
      bad += !(b > prev) || !(s.alpha(t) > 0.0);
      prev = b;
    }
  }
  r.value = bad;
  r.tolerance = 0.0;
  r.pass = bad == 0;
  r.samples = 5005;
  return r;
}

PropertyReport check_entropy_linearity() {
  auto r = make("entropy_linearity_continuous", "schedule", "continuous",
                "sigma1=0.001,sqrt(0.001),0.02;grid=101", "max_abs_dev", 0);
  // the input entropy is D/2 ln(2 pi e) - D/2 ln(1 + beta(t))
  double worst = 0.0;
  for (double s1 : {0.001, std::sqrt(0.001), 0.02}) {
    const auto s = AccuracySchedule::continuous_sigma(s1);
    const double end = std::log1p(s.beta(1.0));
    for (int j = 0; j <= 100; ++j) {
      const double t = j / 100.0;
      worst = std::max(worst, std::abs(std::log1p(s.beta(t)) - t * end));
    }
  }
  r.value = worst;
  r.tolerance = 1e-12;
  r.pass = worst <= r.tolerance;
  r.samples = 303;
  return r;
}

PropertyReport check_discrete_entropy_decreasing(std::uint64_t seed) {
  auto r = make("entropy_decreasing_discrete", "schedule", "discrete",
                "K=27,beta1=0.75;K=2,beta1=3;grid=11;draws=20000", "violations", seed);
  Rng rng = stream(seed, r.id);
  int bad = 0;
  const int draws = 20000;
  std::string detail;
  for (auto [K, b1] : {std::pair{27, 0.75}, std::pair{2, 3.0}}) {
    const auto sched = AccuracySchedule::discrete_quadratic(b1);
    std::vector<Vec> noise(draws, Vec(K));
    for (auto& z : noise)
      for (double& v : z) v = rng.normal();
    double prev = kInf;
    for (int j = 0; j <= 10; ++j) {
      const double b = sched.beta(j / 10.0);
      double h = 0.0;
      for (const auto& z : noise) {
        Vec y(K);
        for (int k = 0; k < K; ++k) y[k] = b * ((k == 0 ? K : 0) - 1) + std::sqrt(b * K) * z[k];
        for (double p : softmax(y))
          if (p > 0.0) h -= p * std::log(p);
      }
      h /= draws;
      bad += !(h < prev);
      prev = h;
      if (j % 5 == 0) detail += (detail.empty() ? "" : ";") + ("K=" + std::to_string(K) + ",t=" +
                                                                short_num(j / 10.0) + ":H=" + short_num(h));
    }
  }
  r.value = bad;
  r.tolerance = 0.0;
  r.pass = bad == 0;
  r.samples = 2 * 11 * draws;
  r.detail = detail;
  return r;
}

PropertyReport check_presets() {
  auto r = make("schedule_presets", "schedule", "-", "bins256;bins16;binary;text", "mismatches", 0);
  int bad = 0;
  bad += presets::kSigma1Bins256 != 0.001;
  bad += presets::kSigma1Bins16 != std::sqrt(0.001);
  bad += presets::kBeta1Binary != 3.0;
  bad += presets::kBeta1Text != 0.75;
  r.value = bad;
  r.tolerance = 0.0;
  r.pass = bad == 0;
  r.samples = 4;
  r.detail = "sigma1=" + short_num(presets::kSigma1Bins256) + "," + short_num(presets::kSigma1Bins16) +
             ";beta1=" + short_num(presets::kBeta1Binary) + "," + short_num(presets::kBeta1Text);
  return r;
}

// ---- gradients --------------------------------------------------------------------

PropertyReport check_gradients(Modality m, std::uint64_t seed, int params) {
  auto r = make("gradients_" + std::string(to_string(m)), "gradients", std::string(to_string(m)),
                "params=" + std::to_string(params) + ";h=1e-5", "max_rel_err", seed);
  Rng rng = stream(seed, r.id);
  std::vector<ModelConfig> cfgs;
  ModelConfig base;
  base.modality = m;
  base.dim = 2;
  if (m == Modality::continuous) {
    base.sigma1 = 0.02;
    cfgs.push_back(base);
  } else if (m == Modality::discretised) {
    base.classes = 16;
    base.sigma1 = std::sqrt(0.001);
    cfgs.push_back(base);
  } else {
    base.classes = 3;
    cfgs.push_back(base);
    base.classes = 2;
    cfgs.push_back(base);
  }
  const double h = 1e-5;
  double worst = 0.0;
  std::uint64_t checked = 0;
  for (const auto& cfg : cfgs) {
    PredictorSpec spec;
    spec.modality = m;
    spec.dim = cfg.dim;
    spec.classes = cfg.classes;
    spec.hidden = {16, 16};
    spec.time.fourier_pairs = 4;
    Mlp net = Mlp::initialised(spec, rng, 1.0);
    Dataset ds;
    ds.modality = m;
    ds.dim = cfg.dim;
    ds.classes = cfg.classes;
    if (m == Modality::continuous) {
      Vec item(cfg.dim);
      for (double& v : item) v = rng.uniform() * 1.6 - 0.8;
      ds.push_real(item);
    } else {
      std::vector<int> item(cfg.dim);
      for (int& v : item) v = static_cast<int>(rng.uniform_index(cfg.classes));
      ds.push_index(item);
    }
    for (int rep = 0; rep < 2; ++rep) {
      const double t = 0.2 + 0.6 * rng.uniform();
      const FlowDraw draw = draw_flow(rng, cfg, ds, 0, t);
      Mlp::Tape tape;
      const Vec out = net.forward(draw.network_input, t, tape);
      const LossGrad lg = cts_time_loss(cfg, ds, 0, draw, out);
      const Vec grad = net.backward(tape, lg.d_output);
      auto loss_at = [&](const Vec& p) {
        Mlp probe = net;
        probe.set_params(p);
        return cts_time_loss(cfg, ds, 0, draw, probe.forward(draw.network_input, t)).loss;
      };
      Vec p = net.params();
      const int per = (params + static_cast<int>(cfgs.size()) * 2 - 1) / (static_cast<int>(cfgs.size()) * 2);
      for (int j = 0; j < per; ++j) {
        const std::size_t k = rng.uniform_index(p.size());
        const double orig = p[k];
        p[k] = orig + h;
        const double up = loss_at(p);
        p[k] = orig - h;
        const double down = loss_at(p);
        p[k] = orig;
        const double fd = (up - down) / (2 * h);
        // absolute floor for parameters whose gradient is ~0
        const double err = std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
        worst = std::max(worst, err);
        ++checked;
      }
    }
  }
  r.value = worst;
  r.tolerance = 1e-5;
  r.pass = worst < r.tolerance;
  r.samples = checked;
  return r;
}

// ---- suite ------------------------------------------------------------------------

namespace {

struct Property {
  std::string group;
  std::string id;
  std::function<PropertyReport(std::uint64_t seed, const Formulas& f)> run;
};

std::vector<Property> registry() {
  using F = const Formulas&;
  using S = std::uint64_t;
  const std::vector<int> ns{1, 4, 16, 64, 256};
  const std::vector<std::uint64_t> ms{100, 1000, 10000};
  std::vector<Property> p = {
      {"identities", "discrete_update_additivity", [](S s, F) { return check_discrete_update_identity(s, 1000); }},
      {"identities", "precision_additivity", [](S s, F) { return check_precision_additivity(s, 1000); }},
      {"identities", "update_composition", [](S s, F) { return check_update_composition(s, 1000); }},
      {"identities", "finite_m_posterior", [](S s, F) { return check_finite_m_posterior(s, 1000); }},
      {"identities", "bin_mass_rows", [](S s, F f) { return check_bin_mass_rows(s, 1000, f); }},
      {"identities", "binary_sigmoid_softmax", [](S s, F) { return check_binary_sigmoid(s, 1000); }},
      {"identities", "bin_centre_golden", [](S, F) { return check_bin_centre_golden(); }},
      {"identities", "quantise_round_trip", [](S, F) { return check_quantise_round_trip(); }},
      {"additivity", "additivity_continuous",
       [](S s, F) { return check_additivity(Modality::continuous, 1.0, 1.0, 1000000, s); }},
      {"additivity", "additivity_discrete",
       [](S s, F) { return check_additivity(Modality::discrete, 0.5, 1.0, 200000, s); }},
      {"flow", "flow_continuous",
       [](S s, F) { return check_flow_equivalence(Modality::continuous, 64, 0.5, 1000000, s); }},
      {"flow", "flow_discrete",
       [](S s, F) { return check_flow_equivalence(Modality::discrete, 32, 0.7, 200000, s); }},
      {"flow", "flow_prior_at_zero", [](S s, F) { return check_flow_prior(s); }},
      {"kl", "kl_continuous_closed_form", [](S s, F) { return check_kl_continuous(s, 5, 1000000); }},
      {"kl", "kl_discretised_quadrature",
       [](S s, F) { return check_kl_mixture(Modality::discretised, s, 1000000); }},
      {"kl", "kl_discrete_quadrature", [](S s, F) { return check_kl_mixture(Modality::discrete, s, 1000000); }},
      {"kl", "kl_zero_at_data", [](S s, F) { return check_kl_zero(s); }},
      {"kl", "kl_discretised_below_continuous", [](S s, F) { return check_kl_ordering(s, 5, 1000000); }},
      {"convergence", "convergence_continuous",
       [ns](S s, F f) { return check_loss_convergence(Modality::continuous, ns, s, f); }},
      {"convergence", "convergence_discretised",
       [ns](S s, F f) { return check_loss_convergence(Modality::discretised, ns, s, f); }},
      {"convergence", "convergence_discrete",
       [ns](S s, F f) { return check_loss_convergence(Modality::discrete, ns, s, f); }},
      {"convergence", "estimators_continuous",
       [](S s, F) { return check_loss_estimators(Modality::continuous, s); }},
      {"convergence", "estimators_discretised",
       [](S s, F) { return check_loss_estimators(Modality::discretised, s); }},
      {"convergence", "estimators_discrete", [](S s, F) { return check_loss_estimators(Modality::discrete, s); }},
      {"convergence", "perfect_predictor_zero_loss", [](S s, F) { return check_perfect_predictor(s); }},
      {"schedule", "schedule_telescoping", [](S, F f) { return check_schedule_telescoping(f); }},
      {"schedule", "schedule_derivative", [](S, F) { return check_schedule_derivative(); }},
      {"schedule", "schedule_monotone", [](S, F) { return check_schedule_monotone(); }},
      {"schedule", "entropy_linearity_continuous", [](S, F) { return check_entropy_linearity(); }},
      {"schedule", "entropy_decreasing_discrete", [](S s, F) { return check_discrete_entropy_decreasing(s); }},
      {"schedule", "schedule_presets", [](S, F) { return check_presets(); }},
      {"gradients", "gradients_continuous", [](S s, F) { return check_gradients(Modality::continuous, s, 50); }},
      {"gradients", "gradients_discretised", [](S s, F) { return check_gradients(Modality::discretised, s, 50); }},
      {"gradients", "gradients_discrete", [](S s, F) { return check_gradients(Modality::discrete, s, 50); }},
  };
  for (int K : {2, 5})
    for (double a : {0.25, 1.0, 4.0})
      p.push_back({"finite_m", "finite_m_K" + std::to_string(K) + "_alpha" + short_num(a),
                   [K, a, ms](S s, F) { return check_finite_m_limit(K, a, ms, 500000, s); }});
  return p;
}

}  // namespace

const std::vector<std::string>& groups() {
  static const std::vector<std::string> g = {"identities", "additivity", "flow",     "kl",
                                             "convergence", "finite_m",   "schedule", "gradients"};
  return g;
}

std::vector<PropertyReport> run_all(const SuiteOptions& opt) {
  for (const auto& name : opt.filter) {
    bool known = std::find(groups().begin(), groups().end(), name) != groups().end();
    if (!known) {
      for (const auto& p : registry()) known = known || p.id == name;
    }
    if (!known) throw std::invalid_argument("unknown property group or id '" + name + "'");
  }
  std::vector<Property> selected;
  for (auto& p : registry()) {
    const bool take = opt.filter.empty() ||
                      std::find(opt.filter.begin(), opt.filter.end(), p.group) != opt.filter.end() ||
                      std::find(opt.filter.begin(), opt.filter.end(), p.id) != opt.filter.end();
    if (take) selected.push_back(std::move(p));
  }
  if (selected.empty()) throw std::invalid_argument("no properties selected");
  const Formulas f = Formulas::mutated(opt.mutation);
  std::vector<PropertyReport> out(selected.size());
  parallel_for(selected.size(), opt.threads, [&](std::size_t i) { out[i] = selected[i].run(opt.seed, f); });
  return out;
}

bool all_passed(std::span<const PropertyReport> reports) {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
}

std::string report_lines(std::span<const PropertyReport> reports) {
  std::string s;
  for (const auto& r : reports) s += r.line() + "\n";
  return s;
}

std::string summary(std::span<const PropertyReport> reports) {
  std::string s;
  std::size_t passed = 0;
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-4s %-12s %-34s %-22s %12.5g  (tol %g)\n", r.pass ? "ok" : "FAIL",
                  r.group.c_str(), r.id.c_str(), r.statistic.c_str(), r.value, r.tolerance);
    s += buf;
    passed += r.pass;
  }
  std::snprintf(buf, sizeof buf, "%zu/%zu properties passed\n", passed, reports.size());
  return s + buf;
}

}  // namespace bfn::harness
