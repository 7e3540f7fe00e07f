#include "bfn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bfn/discretised.hpp"

namespace bfn {

std::size_t Dataset::size() const {
  if (dim == 0) return 0;
  return modality == Modality::continuous ? reals.size() / dim : indices.size() / dim;
}

std::span<const double> Dataset::real(std::size_t i) const {
  if (modality != Modality::continuous) throw ContractError("dataset: not continuous");
  return {reals.data() + i * dim, dim};
}

std::span<const int> Dataset::index(std::size_t i) const {
  if (modality == Modality::continuous) throw ContractError("dataset: continuous items have no indices");
  return {indices.data() + i * dim, dim};
}

Vec Dataset::centers(std::size_t i) const {
  const discretised::BinGeometry geo(classes);
  const auto idx = index(i);
  Vec c(dim);
  for (std::size_t d = 0; d < dim; ++d) c[d] = geo.center(idx[d]);
  return c;
}

void Dataset::validate() const {
  if (dim == 0) throw DomainError("dataset: dimension must be positive");
  if (modality == Modality::continuous) {
    if (reals.size() % dim) throw DomainError("dataset: payload is not a whole number of items");
    for (double v : reals)
      if (!(v >= -1.0 && v <= 1.0)) throw DomainError("dataset: value outside [-1,1]");
    return;
  }
  if (classes < 2) throw DomainError("dataset: need at least 2 classes");
  if (indices.size() % dim) throw DomainError("dataset: payload is not a whole number of items");
  for (int k : indices)
    if (k < 0 || k >= classes) throw DomainError("dataset: class index out of range");
}

void Dataset::push_real(std::span<const double> x) {
  if (x.size() != dim) throw ContractError("dataset: item width mismatch");
  reals.insert(reals.end(), x.begin(), x.end());
}

void Dataset::push_index(std::span<const int> x) {
  if (x.size() != dim) throw ContractError("dataset: item width mismatch");
  indices.insert(indices.end(), x.begin(), x.end());
}

namespace {

constexpr char kMagic[8] = {'B', 'F', 'N', 'D', 'A', 'T', 'A', '\0'};

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  std::string_view data;
  std::size_t pos = 0;

  template <class T>
  T get() {
    if (pos + sizeof(T) > data.size()) throw std::runtime_error("dataset: truncated file");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += sizeof(T);
    return v;
  }
};

std::uint32_t modality_code(Modality m) { return static_cast<std::uint32_t>(m); }

}  // namespace

std::string encode_dataset(const Dataset& ds) {
  ds.validate();
  std::string out(kMagic, 8);
  put_le<std::uint32_t>(out, kDatasetVersion);
  put_le<std::uint32_t>(out, modality_code(ds.modality));
  put_le<std::uint64_t>(out, ds.dim);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.classes));
  put_le<std::uint64_t>(out, ds.size());
  if (ds.modality == Modality::continuous) {
    for (double v : ds.reals) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_le(out, bits);
    }
  } else {
    for (int k : ds.indices) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(k));
  }
  return out;
}

Dataset decode_dataset(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw std::runtime_error("dataset: bad magic");
  Reader r{bytes, 8};
  const auto version = r.get<std::uint32_t>();
  if (version != kDatasetVersion)
    throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
  const auto code = r.get<std::uint32_t>();
  if (code > 2) throw std::runtime_error("dataset: unknown modality code");
  Dataset ds;
  ds.modality = static_cast<Modality>(code);
  ds.dim = r.get<std::uint64_t>();
  ds.classes = static_cast<int>(r.get<std::uint32_t>());
  const auto count = r.get<std::uint64_t>();
  const std::size_t n = count * ds.dim;
  const std::size_t width = ds.modality == Modality::continuous ? 8 : 4;
  if (bytes.size() - r.pos != n * width) throw std::runtime_error("dataset: payload size mismatch");
  if (ds.modality == Modality::continuous) {
    ds.reals.resize(n);
    for (auto& v : ds.reals) {
      const auto bits = r.get<std::uint64_t>();
      std::memcpy(&v, &bits, 8);
    }
  } else {
    ds.indices.resize(n);
    for (auto& k : ds.indices) k = static_cast<int>(r.get<std::uint32_t>());
  }
  ds.validate();
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const std::string bytes = encode_dataset(ds);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 0;
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(slurp(path)); }

Alphabet Alphabet::from_file(const std::filesystem::path& path) { return parse(slurp(path)); }

Alphabet Alphabet::parse(std::string_view text) {
  Alphabet a;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    start = end + 1;
    if (line.empty()) continue;
    if (line == "\\n") line = "\n";
    else if (line == "\\t") line = "\t";
    if (utf8_length(static_cast<unsigned char>(line[0])) != line.size())
      throw DomainError("alphabet: line '" + line + "' is not a single symbol");
    for (const auto& s : a.symbols)
      if (s == line) throw DomainError("alphabet: duplicate symbol '" + line + "'");
    a.symbols.push_back(line);
  }
  if (a.symbols.size() < 2) throw DomainError("alphabet: need at least 2 symbols");
  return a;
}

Alphabet Alphabet::latin27() {
  Alphabet a;
  for (char c = 'a'; c <= 'z'; ++c) a.symbols.emplace_back(1, c);
  a.symbols.emplace_back(" ");
  return a;
}

std::vector<int> Alphabet::encode(std::string_view text, std::size_t base_offset) const {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t len = utf8_length(static_cast<unsigned char>(text[pos]));
    if (len == 0 || pos + len > text.size())
      throw DomainError("text: invalid UTF-8 at byte offset " + std::to_string(base_offset + pos));
    const std::string_view sym = text.substr(pos, len);
    int found = -1;
    for (std::size_t k = 0; k < symbols.size(); ++k)
      if (symbols[k] == sym) {
        found = static_cast<int>(k);
        break;
      }
    if (found < 0)
      throw DomainError("text: symbol not in alphabet at byte offset " +
                        std::to_string(base_offset + pos));
    out.push_back(found);
    pos += len;
  }
  return out;
}

std::string Alphabet::decode(std::span<const int> idx) const {
  std::string s;
  for (int k : idx) {
    if (k < 0 || k >= size()) throw DomainError("text: class index out of range");
    s += symbols[k];
  }
  return s;
}

Dataset ingest_text(std::string_view text, const Alphabet& alphabet, std::size_t length) {
  Dataset ds;
  ds.modality = Modality::discrete;
  ds.classes = alphabet.size();
  if (length > 0) {
    ds.dim = length;
    ds.indices = alphabet.encode(text);
    if (ds.indices.size() % length)
      throw DomainError("text: " + std::to_string(ds.indices.size()) +
                        " symbols is not a multiple of the item length " + std::to_string(length));
  } else {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      const std::vector<int> item = alphabet.encode(text.substr(start, end - start), start);
      if (ds.dim == 0) ds.dim = item.size();
      if (item.size() != ds.dim || item.empty())
        throw DomainError("text: line at byte offset " + std::to_string(start) +
                          " has a different length");
      ds.push_index(item);
      start = end + 1;
    }
  }
  ds.validate();
  return ds;
}

std::string export_text(const Dataset& ds, const Alphabet& alphabet, bool lines) {
  if (ds.modality != Modality::discrete) throw DomainError("text export needs a discrete dataset");
  if (ds.classes != alphabet.size()) throw DomainError("alphabet size does not match the dataset");
  std::string out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += alphabet.decode(ds.index(i));
    if (lines) out += '\n';
  }
  return out;
}

Dataset ingest_pixels(std::span<const std::uint8_t> pixels, std::size_t dim, Modality modality,
                      int classes) {
  if (dim == 0 || pixels.size() % dim)
    throw DomainError("image: " + std::to_string(pixels.size()) +
                      " pixels is not a whole number of items of " + std::to_string(dim));
  Dataset ds;
  ds.modality = modality;
  ds.dim = dim;
  if (modality == Modality::continuous) {
    ds.reals.reserve(pixels.size());
    for (auto v : pixels) ds.reals.push_back(2.0 * v / 255.0 - 1.0);
  } else {
    if (classes < 2 || classes > 256) throw DomainError("image: classes must lie in 2..256");
    ds.classes = classes;
    ds.indices.reserve(pixels.size());
    for (auto v : pixels) ds.indices.push_back(v * classes / 256);
  }
  ds.validate();
  return ds;
}

std::uint8_t pixel_from_value(double x) {
  const double p = std::round((x + 1.0) * 255.0 / 2.0);
  return static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
}

std::vector<std::uint8_t> export_pixels(const Dataset& ds) {
  std::vector<std::uint8_t> out;
  if (ds.modality == Modality::continuous) {
    for (double v : ds.reals) out.push_back(pixel_from_value(v));
    return out;
  }
  const discretised::BinGeometry geo(ds.classes);
  for (int k : ds.indices) out.push_back(pixel_from_value(geo.center(k)));
  return out;
}

}  // namespace bfn
