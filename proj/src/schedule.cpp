#include "bfn/schedule.hpp"

#include <string>

#include "bfn/numerics.hpp"

namespace bfn {

namespace {

void check_time(double t, bool allow_zero = true) {
  if (!(t >= 0.0 && t <= 1.0) || (!allow_zero && t == 0.0))
    throw DomainError("accuracy schedule: time " + std::to_string(t) + " outside [0,1]");
}

}  // namespace

AccuracySchedule AccuracySchedule::continuous_sigma(double sigma1) {
  if (!(sigma1 > 0.0 && sigma1 < 1.0))
    throw DomainError("continuous_sigma: sigma1 must lie in (0,1)");
  return {Kind::continuous_sigma, sigma1};
}

AccuracySchedule AccuracySchedule::discrete_quadratic(double beta1) {
  if (!(beta1 > 0.0) || !std::isfinite(beta1))
    throw DomainError("discrete_quadratic: beta1 must be positive");
  return {Kind::discrete_quadratic, beta1};
}

double AccuracySchedule::beta(double t) const {
  check_time(t);
  if (kind_ == Kind::continuous_sigma) return std::expm1(-2.0 * t * std::log(param_));
  return t * t * param_;
}

double AccuracySchedule::alpha(double t) const {
  check_time(t);
  if (kind_ == Kind::continuous_sigma) {
    const double ln_s = std::log(param_);
    return -2.0 * ln_s * std::exp(-2.0 * t * ln_s);
  }
  return 2.0 * t * param_;
}

double AccuracySchedule::step_alpha(int i, int n) const {
  if (n < 1 || i < 1 || i > n)
    throw DomainError("step_alpha: index " + std::to_string(i) + " outside 1.." +
                      std::to_string(n));
  const double nn = static_cast<double>(n);
  if (kind_ == Kind::continuous_sigma) {
    // sigma1^(-2i/n) * (1 - sigma1^(2/n))
    const double ln_s = std::log(param_);
    return std::exp(-2.0 * i * ln_s / nn) * -std::expm1(2.0 * ln_s / nn);
  }
  return param_ * (2.0 * i - 1.0) / (nn * nn);
}

double AccuracySchedule::gamma(double t) const {
  check_time(t);
  if (kind_ != Kind::continuous_sigma)
    throw ContractError("gamma is defined for the continuous schedule only");
  return -std::expm1(2.0 * t * std::log(param_));
}

}  // namespace bfn
