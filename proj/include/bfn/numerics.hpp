#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bfn {

using Vec = std::vector<double>;

/// Raised when an argument lies outside the mathematical domain of an
/// operation (non-positive variance, time outside [0,1], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a caller breaks an interface contract (wrong vector width,
/// backward without a recorded forward, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Seedable, splittable xoshiro256** generator.
///
/// The full state is four 64-bit words plus a draw counter, so it can be
/// checkpointed and restored exactly. Satisfies UniformRandomBitGenerator.
/// Single owner: callers that need parallel streams must split() first.
class Rng {
 public:
  using result_type = std::uint64_t;
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in (0, 1).
  double uniform_open();
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal draw (Box-Muller, one output per call).
  double normal();

  /// Derives an independent stream. Depends only on the current state and
  /// stream_id; does not advance this generator.
  [[nodiscard]] Rng split(std::uint64_t stream_id) const;

  std::uint64_t draws() const { return draws_; }
  const State& state() const { return s_; }
  static Rng from_state(const State& state, std::uint64_t draws);

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  State s_{};
  std::uint64_t draws_ = 0;
};

std::uint64_t splitmix64(std::uint64_t& x);

/// mean + sqrt(var) * z, z iid standard normal.
Vec gaussian_sample(Rng& rng, std::span<const double> mean, double var);
Vec gaussian_sample(Rng& rng, std::span<const double> mean,
                    std::span<const double> var);

// Error function computed locally so results do not depend on the platform
// libm. |x| < 2 uses the all-positive series
//   erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n x / (1*3*...*(2n+1)),
// larger |x| the Laplace continued fraction for erfc. Absolute error is
// below 1e-15 over the real line.
double erf(double x);
double erfc(double x);

/// Standard normal CDF, Phi(z).
double normal_cdf(double z);
/// Standard normal density.
double normal_pdf(double z);

double sigmoid(double x);

/// Max-subtracted softmax. Output sums to 1 and every entry is > 0 for
/// finite inputs whose spread is below ~700.
Vec softmax(std::span<const double> logits);

/// Log density of N(y | mean, var * I), summed over dimensions.
double log_gaussian_pdf(std::span<const double> y, std::span<const double> mean,
                        double var);
/// Scalar version.
double log_gaussian_pdf(double y, double mean, double var);

/// ln sum_i exp(terms_i). Terms equal to -inf are allowed.
double log_sum_exp(std::span<const double> terms);

}  // namespace bfn
