#pragma once

#include <cmath>

namespace bfn {

/// Accuracy schedule beta(t) with rate alpha(t) = d beta / dt.
///
/// Two closed forms are supported:
///   continuous_sigma(s1):   beta(t) = s1^(-2t) - 1, the schedule under which
///                           the expected entropy of a Gaussian input
///                           distribution falls linearly in t;
///   discrete_quadratic(b1): beta(t) = b1 * t^2.
/// Value type; immutable after construction.
class AccuracySchedule {
 public:
  enum class Kind { continuous_sigma, discrete_quadratic };

  static AccuracySchedule continuous_sigma(double sigma1);
  static AccuracySchedule discrete_quadratic(double beta1);

  Kind kind() const { return kind_; }
  /// sigma1 for continuous_sigma, beta1 for discrete_quadratic.
  double parameter() const { return param_; }

  double beta(double t) const;
  double alpha(double t) const;
  /// beta(i/n) - beta((i-1)/n), evaluated in closed form.
  double step_alpha(int i, int n) const;

  /// gamma(t) = beta/(1+beta) = 1 - sigma1^(2t). continuous_sigma only.
  double gamma(double t) const;

  friend bool operator==(const AccuracySchedule&, const AccuracySchedule&) = default;

 private:
  AccuracySchedule(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_;
};

namespace presets {
/// 256-bin image data.
inline constexpr double kSigma1Bins256 = 0.001;
/// 16-bin image data, sqrt(0.001).
inline const double kSigma1Bins16 = std::sqrt(0.001);
/// Binarised images.
inline constexpr double kBeta1Binary = 3.0;
/// 27-symbol character data.
inline constexpr double kBeta1Text = 0.75;
}  // namespace presets

}  // namespace bfn
