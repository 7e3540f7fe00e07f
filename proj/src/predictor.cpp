#include "bfn/predictor.hpp"

#include <cmath>
#include <numbers>

namespace bfn {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::continuous: return "continuous";
    case Modality::discretised: return "discretised";
    case Modality::discrete: return "discrete";
  }
  return "?";
}

Modality modality_from_string(std::string_view name) {
  if (name == "continuous") return Modality::continuous;
  if (name == "discretised" || name == "discretized") return Modality::discretised;
  if (name == "discrete") return Modality::discrete;
  throw DomainError("unknown modality '" + std::string(name) + "'");
}

Vec checked_forward(const Predictor& predictor, std::span<const double> input, double t) {
  if (input.size() != predictor.input_width())
    throw ContractError("predictor input width " + std::to_string(input.size()) +
                        ", expected " + std::to_string(predictor.input_width()));
  Vec out = predictor.forward(input, t);
  if (out.size() != predictor.output_width())
    throw ContractError("predictor output width " + std::to_string(out.size()) +
                        ", expected " + std::to_string(predictor.output_width()));
  return out;
}

std::string_view to_string(Activation a) {
  return a == Activation::tanh ? "tanh" : "silu";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "silu") return Activation::silu;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

std::size_t TimeFeatures::width() const {
  return fourier_pairs == 0 ? 1 : 2 * static_cast<std::size_t>(fourier_pairs);
}

void TimeFeatures::encode(double t, std::span<double> out) const {
  if (fourier_pairs == 0) {
    out[0] = t;
    return;
  }
  double freq = std::numbers::pi;
  for (int j = 0; j < fourier_pairs; ++j) {
    out[2 * j] = std::sin(freq * t);
    out[2 * j + 1] = std::cos(freq * t);
    freq *= 2.0;
  }
}

std::size_t modality_input_width(Modality m, std::size_t dim, int classes) {
  if (m == Modality::discrete)
    return classes == 2 ? dim : dim * static_cast<std::size_t>(classes);
  return dim;
}

std::size_t modality_output_width(Modality m, std::size_t dim, int classes) {
  switch (m) {
    case Modality::continuous: return dim;
    case Modality::discretised: return 2 * dim;
    case Modality::discrete:
      return classes == 2 ? dim : dim * static_cast<std::size_t>(classes);
  }
  return 0;
}

std::size_t PredictorSpec::input_width() const {
  return modality_input_width(modality, dim, classes);
}

std::size_t PredictorSpec::output_width() const {
  return modality_output_width(modality, dim, classes);
}

void PredictorSpec::validate() const {
  if (dim == 0) throw DomainError("predictor spec: dimension must be positive");
  if (modality != Modality::continuous && classes < 2)
    throw DomainError("predictor spec: need at least 2 classes/bins");
  if (time.fourier_pairs < 0 || time.fourier_pairs > 30)
    throw DomainError("predictor spec: fourier_pairs must be in [0,30]");
  for (auto h : hidden)
    if (h == 0) throw DomainError("predictor spec: hidden widths must be positive");
}

}  // namespace bfn
