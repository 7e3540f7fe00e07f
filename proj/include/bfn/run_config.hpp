#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bfn/model.hpp"
#include "bfn/predictor.hpp"
#include "bfn/training.hpp"

namespace bfn {

/// Flat key=value run configuration. Every known key has a default; unknown
/// keys are rejected. Lines starting with '#' are comments.
///
/// schedule presets: bins256 (sigma1 0.001), bins16 (sigma1 sqrt(0.001)),
/// binary (beta1 3), text (beta1 0.75). An explicit sigma1/beta1 wins over
/// the preset.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::string_view text);
  static RunConfig from_file(const std::filesystem::path& path);
  /// Parses "key=value".
  void apply_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool is_set(const std::string& key) const;

  /// (sigma1, beta1) after applying the schedule preset.
  std::pair<double, double> resolved_schedule() const;

  /// Sorted key=value lines for every key, defaults included. Preset
  /// schedule values are written out resolved.
  std::string snapshot() const;
  const std::map<std::string, std::string>& values() const { return values_; }

  ModelConfig model() const;
  PredictorSpec predictor_spec() const;
  TrainConfig train() const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

}  // namespace bfn
