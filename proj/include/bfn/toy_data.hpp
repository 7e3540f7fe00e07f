#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfn/dataset.hpp"

namespace bfn::toy {

/// 16 binarised 8x8 glyphs (hex digits), K = 2, D = 64. Class 1 is ink.
Dataset glyphs();

/// The four 16-character strings of the text toy.
const std::vector<std::string>& strings();
/// strings() over the 27-symbol alphabet, D = 16.
Dataset text();

/// Two-dimensional mixture of four Gaussians at (+-0.5, +-0.5) with std 0.1,
/// clipped to [-1, 1].
Dataset mixture(std::size_t count = 256, std::uint64_t seed = 7);

}  // namespace bfn::toy
