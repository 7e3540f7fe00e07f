#include "bfn/categorical.hpp"

#include <algorithm>
#include <cmath>

namespace bfn {

Categorical::Categorical(std::size_t d, int k, double fill)
    : dim(d), classes(k), probs(d * static_cast<std::size_t>(k), fill) {
  if (k < 1) throw DomainError("categorical: need at least one class");
}

Categorical Categorical::uniform(std::size_t d, int k) {
  return Categorical(d, k, 1.0 / k);
}

std::span<double> Categorical::row(std::size_t d) {
  return {probs.data() + d * classes, static_cast<std::size_t>(classes)};
}

std::span<const double> Categorical::row(std::size_t d) const {
  return {probs.data() + d * classes, static_cast<std::size_t>(classes)};
}

double Categorical::max_row_error() const {
  double worst = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    double s = 0.0;
    for (double p : row(d)) s += p;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

int sample_index(Rng& rng, std::span<const double> row) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] <= 0.0) continue;
    acc += row[k];
    last = static_cast<int>(k);
    if (u < acc) return last;
  }
  return last;
}

std::vector<int> sample_rows(Rng& rng, const Categorical& c) {
  std::vector<int> out(c.dim);
  for (std::size_t d = 0; d < c.dim; ++d) out[d] = sample_index(rng, c.row(d));
  return out;
}

double floored_log(double p) {
  if (!(p > 0.0)) return kLogFloor;
  return std::max(std::log(p), kLogFloor);
}

}  // namespace bfn
