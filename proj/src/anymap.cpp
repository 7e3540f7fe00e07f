#include "bfn/anymap.hpp"

#include <cctype>
#include <stdexcept>

#include "bfn/checkpoint.hpp"

namespace bfn {

std::string encode_anymap(const Anymap& img) {
  if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("anymap: channels must be 1 or 3");
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw std::invalid_argument("anymap: pixel count does not match the geometry");
  std::string out = img.channels == 1 ? "P5\n" : "P6\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

Anymap decode_anymap(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip = [&] {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      return;
    }
  };
  auto number = [&] {
    skip();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
      throw std::runtime_error("anymap: malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1 << 20) throw std::runtime_error("anymap: dimension too large");
      ++pos;
    }
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw std::runtime_error("anymap: only binary P5/P6 files are supported");
  Anymap img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  img.width = number();
  img.height = number();
  const int maxval = number();
  if (maxval != 255) throw std::runtime_error("anymap: only 8-bit files (maxval 255) are supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw std::runtime_error("anymap: malformed header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (bytes.size() - pos != n) throw std::runtime_error("anymap: pixel payload size mismatch");
  img.pixels.assign(bytes.begin() + pos, bytes.end());
  return img;
}

void write_anymap(const std::filesystem::path& path, const Anymap& img) {
  write_file(path, encode_anymap(img));
}

Anymap read_anymap(const std::filesystem::path& path) { return decode_anymap(read_file(path)); }

}  // namespace bfn
