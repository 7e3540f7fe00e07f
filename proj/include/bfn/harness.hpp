#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfn/categorical.hpp"
#include "bfn/numerics.hpp"
#include "bfn/predictor.hpp"
#include "bfn/schedule.hpp"

/// Executable checks of the analytic properties of the three modalities.
/// Every check owns a stream derived from (seed, property id), so a report
/// is reproducible bit-for-bit regardless of thread count or filtering.
namespace bfn::harness {

struct PropertyReport {
  std::string id;
  std::string group;
  std::string modality;  // "continuous", "discretised", "discrete" or "-"
  std::string params;    // ';'-separated key=value list
  std::string statistic;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::string detail;  // free-form, e.g. the per-n gaps of a sweep

  /// One tab-separated record: id, group, modality, params, statistic,
  /// value, tolerance, pass, samples, seed, detail.
  std::string line() const;
};

/// Seeded formula faults used to test that the suite notices them.
enum class Mutation { none, linf_weight, missing_n, alpha_weighting, unclipped_cdf };

std::string_view to_string(Mutation m);
Mutation mutation_from_string(std::string_view name);
const std::vector<Mutation>& all_mutations();

/// The formulas the harness evaluates. correct() forwards to the library;
/// mutated() swaps one of them for a faulty variant.
struct Formulas {
  /// alpha(t) weighting the continuous-time loss.
  std::function<double(const AccuracySchedule&, double t)> linf_rate;
  /// Accuracy of step i of n.
  std::function<double(const AccuracySchedule&, int i, int n)> step_accuracy;
  /// Factor multiplying the per-step KL in the n-step loss.
  std::function<double(int n)> ln_scale;
  /// Discretised histogram masses of one dimension.
  std::function<Vec(double mu, double sigma, int bins)> bin_masses;

  static Formulas correct();
  static Formulas mutated(Mutation m);
};

// ---- quadrature -----------------------------------------------------------

/// Gauss-Hermite rule for E[f(z)], z ~ N(0, 1): nodes and weights summing to 1.
struct GaussRule {
  Vec nodes;
  Vec weights;
};
GaussRule gauss_hermite(int points);

/// KL( N(x, 1/alpha) || sum_k p_k N(center_k, 1/alpha) ) for one dimension,
/// by quadrature over the sender noise.
double discretised_step_kl(std::span<const double> probs, double x, double alpha,
                           const GaussRule& rule);

/// KL between the discrete sender at class x and the receiver mixture with
/// weights probs, one dimension. Supports K = 2 and K = 3.
double discrete_step_kl(std::span<const double> probs, int x, double alpha,
                        const GaussRule& rule);

// ---- multinomial construction ---------------------------------------------

/// m draws of a K-sided die that shows the true class with probability
/// (1 - omega)/K + omega, turned into a logit vector
///   y_k = (c_k - m/K) ln xi,  xi = 1 + omega K / (1 - omega).
class FiniteMSimulator {
 public:
  FiniteMSimulator(int classes, std::uint64_t m, double omega);
  /// omega = sqrt(alpha / m); DomainError unless 0 < omega < 1.
  static FiniteMSimulator from_accuracy(int classes, double alpha, std::uint64_t m);

  int classes() const { return k_; }
  std::uint64_t m() const { return m_; }
  double omega() const { return omega_; }
  double alpha() const { return static_cast<double>(m_) * omega_ * omega_; }
  double log_xi() const;

  /// Face probabilities given the true class.
  Vec face_probs(int x) const;
  std::vector<std::uint64_t> sample_counts(Rng& rng, int x) const;
  Vec logits(std::span<const std::uint64_t> counts) const;

  /// Exact mean and covariance (row-major K x K) of the logits.
  Vec mean(int x) const;
  Vec covariance(int x) const;

  /// Posterior over the true class from the counts by direct enumeration of
  /// the multinomial likelihood, prior theta.
  Vec brute_force_posterior(std::span<const double> theta,
                            std::span<const std::uint64_t> counts) const;

 private:
  int k_;
  std::uint64_t m_;
  double omega_;
};

// ---- individual checks ----------------------------------------------------

PropertyReport check_discrete_update_identity(std::uint64_t seed, int cases);
PropertyReport check_precision_additivity(std::uint64_t seed, int cases);
PropertyReport check_update_composition(std::uint64_t seed, int cases);
PropertyReport check_finite_m_posterior(std::uint64_t seed, int cases);
PropertyReport check_bin_mass_rows(std::uint64_t seed, int cases, const Formulas& f);
PropertyReport check_binary_sigmoid(std::uint64_t seed, int cases);
PropertyReport check_bin_centre_golden();
PropertyReport check_quantise_round_trip();

/// Two updates at (alpha_a, alpha_b) versus one at their sum, compared over
/// `trials` draws. Continuous: precision exactly, mean and variance of mu
/// relatively. Discrete: mean of every simplex coordinate.
PropertyReport check_additivity(Modality m, double alpha_a, double alpha_b, std::uint64_t trials,
                                std::uint64_t seed);
/// flow_sample at t versus n sequential updates whose accuracies sum to beta(t).
PropertyReport check_flow_equivalence(Modality m, int n, double t, std::uint64_t trials,
                                      std::uint64_t seed);
PropertyReport check_flow_prior(std::uint64_t seed);

/// MC log-ratio of the continuous sender and receiver against the closed form.
PropertyReport check_kl_continuous(std::uint64_t seed, int configs, std::uint64_t samples);
/// MC log-ratio against quadrature for a K = 2, D = 1 mixture receiver.
PropertyReport check_kl_mixture(Modality m, std::uint64_t seed, std::uint64_t samples);
/// The KL is zero when the output puts all its mass on the data.
PropertyReport check_kl_zero(std::uint64_t seed);
/// Discretised receiver KL <= continuous receiver KL when the output mass
/// is concentrated in the correct bin.
PropertyReport check_kl_ordering(std::uint64_t seed, int configs, std::uint64_t samples);

/// |mean Ln - mean Linf| over n_values with the fixed scenario predictor of
/// the modality; strictly decreasing and below the final tolerance.
PropertyReport check_loss_convergence(Modality m, const std::vector<int>& n_values,
                                      std::uint64_t seed, const Formulas& f);
/// Library single-sample estimators against quadrature of the same
/// expectation (D = 1 scenarios).
PropertyReport check_loss_estimators(Modality m, std::uint64_t seed);
/// A predictor that knows the datum gives (near) zero loss.
PropertyReport check_perfect_predictor(std::uint64_t seed);

/// Moments of the multinomial construction versus the Gaussian sender with
/// its all-ones direction removed (covariance alpha (K I - 1 1^T)).
PropertyReport check_finite_m_limit(int classes, double alpha,
                                    const std::vector<std::uint64_t>& m_values,
                                    std::uint64_t trials, std::uint64_t seed);

PropertyReport check_schedule_telescoping(const Formulas& f);
PropertyReport check_schedule_derivative();
PropertyReport check_schedule_monotone();
PropertyReport check_entropy_linearity();
PropertyReport check_discrete_entropy_decreasing(std::uint64_t seed);
PropertyReport check_presets();

/// Analytic against central-difference gradients of the continuous-time
/// loss with respect to `params` random MLP parameters.
PropertyReport check_gradients(Modality m, std::uint64_t seed, int params);

// ---- suite ----------------------------------------------------------------

/// Group names accepted by run_all's filter, in run order.
const std::vector<std::string>& groups();

struct SuiteOptions {
  std::uint64_t seed = 0;
  std::vector<std::string> filter;  // empty: every group
  Mutation mutation = Mutation::none;
  int threads = 1;
};

/// Runs the selected groups. An unknown group name raises
/// std::invalid_argument; so does a selection that yields no property.
std::vector<PropertyReport> run_all(const SuiteOptions& opt);

bool all_passed(std::span<const PropertyReport> reports);
std::string report_lines(std::span<const PropertyReport> reports);
std::string summary(std::span<const PropertyReport> reports);

}  // namespace bfn::harness
