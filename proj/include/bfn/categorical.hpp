#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bfn/numerics.hpp"

namespace bfn {

/// D rows of K probabilities, row-major. Used for the discretised output
/// histogram and for discrete input/output parameters.
struct Categorical {
  std::size_t dim = 0;
  int classes = 0;
  Vec probs;

  Categorical() = default;
  Categorical(std::size_t d, int k, double fill = 0.0);
  static Categorical uniform(std::size_t d, int k);

  std::span<double> row(std::size_t d);
  std::span<const double> row(std::size_t d) const;
  double at(std::size_t d, int k) const { return probs[d * classes + k]; }

  /// Largest |row sum - 1| over rows.
  double max_row_error() const;
};

/// Index drawn from a probability row by inverse CDF.
int sample_index(Rng& rng, std::span<const double> row);

/// Drops every row's draw into one vector of class indices.
std::vector<int> sample_rows(Rng& rng, const Categorical& c);

/// ln p with p = 0 mapped to the floor value instead of -inf.
inline constexpr double kLogFloor = -1e6;
double floored_log(double p);

}  // namespace bfn
