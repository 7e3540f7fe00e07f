#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "bfn/dataset.hpp"
#include "bfn/predictor.hpp"
#include "bfn/run_config.hpp"
#include "bfn/training.hpp"

namespace bfn {

/// A saved model. The file is a human-readable header followed by binary
/// sections; see docs in README for the exact layout.
///
/// Header lines (UTF-8, '\n' terminated):
///   bfn-checkpoint
///   version=1
///   predictor=mlp|oracle
///   param_count=P
///   layers=IN:OUT,IN:OUT,...
///   history_rows=H
///   layout=<section list>
///   [config]
///   key=value             (sorted, every known key)
///   [binary]
/// Binary sections, little-endian, in order:
///   params f64[P], ema f64[P], adam_m f64[P], adam_v f64[P], adam_step u64,
///   rng_state u64[4], rng_draws u64, history (u64 step, f64 train, f64 eval)[H],
///   oracle_bytes u64, oracle dataset u8[oracle_bytes]
struct Checkpoint {
  static constexpr int kVersion = 1;

  RunConfig config;
  std::string predictor_kind = "mlp";
  Vec params;
  Vec ema;
  AdamState adam;
  Rng rng;
  std::vector<HistoryRow> history;
  Dataset oracle_data;  // only for predictor_kind == "oracle"

  static Checkpoint from_state(const TrainState& st, const RunConfig& cfg);
  static Checkpoint oracle(const RunConfig& cfg, const Dataset& ds);
  TrainState to_state() const;

  ModelConfig model() const { return config.model(); }
  /// EMA parameters unless raw is requested.
  std::unique_ptr<Predictor> predictor(bool use_ema = true) const;

  std::string encode() const;
  static Checkpoint decode(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace bfn
