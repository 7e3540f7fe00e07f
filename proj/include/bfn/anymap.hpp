#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bfn {

/// 8-bit portable greymap (channels = 1, P5) or pixmap (channels = 3, P6).
struct Anymap {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved channels
};

std::string encode_anymap(const Anymap& img);
/// Accepts binary P5/P6 with maxval 255 and '#' comments in the header.
Anymap decode_anymap(std::string_view bytes);
void write_anymap(const std::filesystem::path& path, const Anymap& img);
Anymap read_anymap(const std::filesystem::path& path);

}  // namespace bfn
