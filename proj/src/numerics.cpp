#include "bfn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bfn {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

constexpr double kInvSqrtPi = 0.56418958354775628695;  // 1/sqrt(pi)
constexpr double kLog2Pi = 1.8378770664093454836;      // ln(2 pi)

}  // namespace

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
}

Rng::result_type Rng::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  ++draws_;
  return result;
}

double Rng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw DomainError("uniform_index: empty range");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return r % n;
}

double Rng::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t stream_id) const {
  std::uint64_t sm = s_[0] ^ rotl(s_[1], 13) ^ rotl(s_[2], 29) ^ rotl(s_[3], 47);
  sm ^= splitmix64(stream_id);
  Rng out;
  for (auto& w : out.s_) w = splitmix64(sm);
  return out;
}

Rng Rng::from_state(const State& state, std::uint64_t draws) {
  Rng out;
  out.s_ = state;
  out.draws_ = draws;
  return out;
}

Vec gaussian_sample(Rng& rng, std::span<const double> mean, double var) {
  if (!(var > 0.0)) throw DomainError("gaussian_sample: variance must be positive");
  const double sd = std::sqrt(var);
  Vec out(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = mean[i] + sd * rng.normal();
  return out;
}

Vec gaussian_sample(Rng& rng, std::span<const double> mean,
                    std::span<const double> var) {
  if (var.size() != mean.size())
    throw ContractError("gaussian_sample: mean/variance length mismatch");
  Vec out(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (!(var[i] > 0.0)) throw DomainError("gaussian_sample: variance must be positive");
    out[i] = mean[i] + std::sqrt(var[i]) * rng.normal();
  }
  return out;
}

namespace {

// erf for 0 <= x < 2.
double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return 2.0 * kInvSqrtPi * std::exp(-x2) * sum;
}

// erfc for x >= 2, modified Lentz evaluation of
//   erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
double erfc_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return kInvSqrtPi * std::exp(-x * x) / f;
}

}  // namespace

double erf(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::abs(x);
  double r;
  if (ax < 2.0) {
    r = erf_series(ax);
  } else if (ax < 6.5) {
    r = 1.0 - erfc_continued_fraction(ax);
  } else {
    r = 1.0;
  }
  return x < 0 ? -r : r;
}

double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 2.0 - erfc(-x);
  if (x < 2.0) return 1.0 - erf_series(x);
  if (x > 27.3) return 0.0;
  return erfc_continued_fraction(x);
}

double normal_cdf(double z) {
  return 0.5 * erfc(-z * std::numbers::sqrt2 * 0.5);
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z - 0.5 * kLog2Pi);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec softmax(std::span<const double> logits) {
  Vec out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double m = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

double log_gaussian_pdf(double y, double mean, double var) {
  if (!(var > 0.0)) throw DomainError("log_gaussian_pdf: variance must be positive");
  const double d = y - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
}

double log_gaussian_pdf(std::span<const double> y, std::span<const double> mean,
                        double var) {
  if (!(var > 0.0)) throw DomainError("log_gaussian_pdf: variance must be positive");
  if (y.size() != mean.size()) throw ContractError("log_gaussian_pdf: length mismatch");
  double quad = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - mean[i];
    quad += d * d;
  }
  return -0.5 * static_cast<double>(y.size()) * (kLog2Pi + std::log(var)) -
         quad / (2.0 * var);
}

double log_sum_exp(std::span<const double> terms) {
  if (terms.empty()) throw DomainError("log_sum_exp: no terms");
  const double m = *std::max_element(terms.begin(), terms.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - m);
  return m + std::log(sum);
}

}  // namespace bfn
