#include "bfn/toy_data.hpp"

#include <algorithm>

namespace bfn::toy {

namespace {

// One byte per row, most significant bit on the left.
constexpr std::uint8_t kGlyphs[16][8] = {
    {0x3c, 0x66, 0x6e, 0x76, 0x66, 0x66, 0x3c, 0x00},  // 0
    {0x18, 0x38, 0x18, 0x18, 0x18, 0x18, 0x7e, 0x00},  // 1
    {0x3c, 0x66, 0x06, 0x0c, 0x30, 0x60, 0x7e, 0x00},  // 2
    {0x3c, 0x66, 0x06, 0x1c, 0x06, 0x66, 0x3c, 0x00},  // 3
    {0x0c, 0x1c, 0x3c, 0x6c, 0x7e, 0x0c, 0x0c, 0x00},  // 4
    {0x7e, 0x60, 0x7c, 0x06, 0x06, 0x66, 0x3c, 0x00},  // 5
    {0x1c, 0x30, 0x60, 0x7c, 0x66, 0x66, 0x3c, 0x00},  // 6
    {0x7e, 0x06, 0x0c, 0x18, 0x30, 0x30, 0x30, 0x00},  // 7
    {0x3c, 0x66, 0x66, 0x3c, 0x66, 0x66, 0x3c, 0x00},  // 8
    {0x3c, 0x66, 0x66, 0x3e, 0x06, 0x0c, 0x38, 0x00},  // 9
    {0x18, 0x3c, 0x66, 0x66, 0x7e, 0x66, 0x66, 0x00},  // A
    {0x7c, 0x66, 0x66, 0x7c, 0x66, 0x66, 0x7c, 0x00},  // B
    {0x3c, 0x66, 0x60, 0x60, 0x60, 0x66, 0x3c, 0x00},  // C
    {0x78, 0x6c, 0x66, 0x66, 0x66, 0x6c, 0x78, 0x00},  // D
    {0x7e, 0x60, 0x60, 0x7c, 0x60, 0x60, 0x7e, 0x00},  // E
    {0x7e, 0x60, 0x60, 0x7c, 0x60, 0x60, 0x60, 0x00},  // F
};

}  // namespace

Dataset glyphs() {
  Dataset ds;
  ds.modality = Modality::discrete;
  ds.dim = 64;
  ds.classes = 2;
  for (const auto& g : kGlyphs)
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) ds.indices.push_back((g[r] >> (7 - c)) & 1);
  ds.validate();
  return ds;
}

const std::vector<std::string>& strings() {
  static const std::vector<std::string> s = {
      "bayesian flow ok",
      "networks of bits",
      "the quick brown ",
      "lazy dogs sleep ",
  };
  return s;
}

Dataset text() {
  std::string all;
  for (const auto& s : strings()) all += s;
  return ingest_text(all, Alphabet::latin27(), 16);
}

Dataset mixture(std::size_t count, std::uint64_t seed) {
  Dataset ds;
  ds.modality = Modality::continuous;
  ds.dim = 2;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto mode = rng.uniform_index(4);
    const double cx = (mode & 1) ? 0.5 : -0.5;
    const double cy = (mode & 2) ? 0.5 : -0.5;
    ds.reals.push_back(std::clamp(cx + 0.1 * rng.normal(), -1.0, 1.0));
    ds.reals.push_back(std::clamp(cy + 0.1 * rng.normal(), -1.0, 1.0));
  }
  ds.validate();
  return ds;
}

}  // namespace bfn::toy
