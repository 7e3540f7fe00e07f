#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfn/numerics.hpp"
#include "bfn/predictor.hpp"

namespace bfn {

/// In-memory dataset. Continuous items are stored as reals in [-1, 1];
/// discretised and discrete items as 0-based class indices below classes.
struct Dataset {
  Modality modality = Modality::continuous;
  std::size_t dim = 0;
  int classes = 0;
  Vec reals;
  std::vector<int> indices;

  std::size_t size() const;
  std::span<const double> real(std::size_t i) const;
  std::span<const int> index(std::size_t i) const;
  /// Bin centres of a discretised item.
  Vec centers(std::size_t i) const;
  void validate() const;

  void push_real(std::span<const double> x);
  void push_index(std::span<const int> x);
};

/// Binary layout, all integers little-endian:
///   "BFNDATA\0" | u32 version | u32 modality | u64 dim | u32 classes |
///   u64 count | payload
/// The payload is count*dim f64 values (continuous) or u32 indices.
inline constexpr std::uint32_t kDatasetVersion = 1;
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
std::string encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::string_view bytes);

/// Ordered list of UTF-8 symbols, one per line of the alphabet file. A line
/// holding a single space is the space symbol; "\n" and "\t" escapes are
/// accepted for newline and tab.
struct Alphabet {
  std::vector<std::string> symbols;

  static Alphabet from_file(const std::filesystem::path& path);
  static Alphabet parse(std::string_view text);
  /// Lowercase letters followed by space.
  static Alphabet latin27();
  int size() const { return static_cast<int>(symbols.size()); }
  /// Class indices for a UTF-8 string. Unknown symbols raise an error naming
  /// the byte offset (counted from base_offset).
  std::vector<int> encode(std::string_view text, std::size_t base_offset = 0) const;
  std::string decode(std::span<const int> idx) const;
};

/// Text becomes items of `length` symbols. With length 0 every line is an
/// item and all lines must have equal length.
Dataset ingest_text(std::string_view text, const Alphabet& alphabet, std::size_t length);
std::string export_text(const Dataset& ds, const Alphabet& alphabet, bool lines);

/// 8-bit pixels become items of `dim` values. Continuous: 2v/255 - 1.
/// Discretised and discrete: class floor(v * classes / 256).
Dataset ingest_pixels(std::span<const std::uint8_t> pixels, std::size_t dim,
                      Modality modality, int classes);
/// Values (or bin centres) map back to round((x + 1) * 255 / 2). Exact
/// inverse of ingest_pixels for continuous data and for 256 bins.
std::vector<std::uint8_t> export_pixels(const Dataset& ds);

std::uint8_t pixel_from_value(double x);

}  // namespace bfn
