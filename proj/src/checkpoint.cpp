#include "bfn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bfn/mlp.hpp"

namespace bfn {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

namespace {

constexpr std::string_view kLayout =
    "params:f64[P],ema:f64[P],adam_m:f64[P],adam_v:f64[P],adam_step:u64,rng_state:u64[4],"
    "rng_draws:u64,history:(u64,f64,f64)[H],oracle_bytes:u64,oracle:u8[oracle_bytes];le";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_vec(std::string& out, const Vec& v) {
  for (double x : v) put_f64(out, x);
}

struct Cursor {
  std::string_view data;
  std::size_t pos = 0;

  std::uint64_t u64() {
    if (pos + 8 > data.size()) throw std::runtime_error("checkpoint: truncated binary section");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  Vec vec(std::size_t n) {
    Vec v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::string_view line() {
    const auto end = data.find('\n', pos);
    if (end == std::string_view::npos) throw std::runtime_error("checkpoint: truncated header");
    const auto l = data.substr(pos, end - pos);
    pos = end + 1;
    return l;
  }
};

std::string layers_descriptor(const Mlp& m) {
  std::string s;
  for (const auto& L : m.layers()) {
    if (!s.empty()) s += ",";
    s += std::to_string(L.in) + ":" + std::to_string(L.out);
  }
  return s;
}

}  // namespace

Checkpoint Checkpoint::from_state(const TrainState& st, const RunConfig& cfg) {
  Checkpoint c;
  c.config = RunConfig::parse(cfg.snapshot());
  c.params = st.net.params();
  c.ema = st.ema;
  c.adam = st.adam;
  c.rng = st.rng;
  c.history = st.history;
  return c;
}

Checkpoint Checkpoint::oracle(const RunConfig& cfg, const Dataset& ds) {
  Checkpoint c;
  c.config = RunConfig::parse(cfg.snapshot());
  c.predictor_kind = "oracle";
  c.config.model().check_dataset(ds);
  if (ds.size() > 64) throw DomainError("oracle checkpoints hold at most 64 items");
  c.oracle_data = ds;
  return c;
}

TrainState Checkpoint::to_state() const {
  if (predictor_kind != "mlp") throw DomainError("only mlp checkpoints can resume training");
  TrainState st(config.model(), config.predictor_spec(), config.train());
  st.net.set_params(params);
  if (ema.size() != params.size()) throw std::runtime_error("checkpoint: ema size mismatch");
  st.ema = ema;
  st.adam = adam;
  st.rng = rng;
  st.history = history;
  return st;
}

std::unique_ptr<Predictor> Checkpoint::predictor(bool use_ema) const {
  if (predictor_kind == "oracle") return make_dataset_oracle(model(), oracle_data);
  auto m = std::make_unique<Mlp>(config.predictor_spec());
  m->set_params(use_ema ? ema : params);
  return m;
}

std::string Checkpoint::encode() const {
  std::string out;
  out += "bfn-checkpoint\n";
  out += "version=" + std::to_string(kVersion) + "\n";
  out += "predictor=" + predictor_kind + "\n";
  out += "param_count=" + std::to_string(params.size()) + "\n";
  if (predictor_kind == "mlp") out += "layers=" + layers_descriptor(Mlp(config.predictor_spec())) + "\n";
  out += "history_rows=" + std::to_string(history.size()) + "\n";
  out += "layout=" + std::string(kLayout) + "\n";
  out += "[config]\n";
  out += config.snapshot();
  out += "[binary]\n";

  const std::size_t P = params.size();
  if (ema.size() != P) throw ContractError("checkpoint: ema size mismatch");
  put_vec(out, params);
  put_vec(out, ema);
  put_vec(out, adam.m.empty() ? Vec(P, 0.0) : adam.m);
  put_vec(out, adam.v.empty() ? Vec(P, 0.0) : adam.v);
  put_u64(out, adam.step);
  for (auto w : rng.state()) put_u64(out, w);
  put_u64(out, rng.draws());
  for (const auto& r : history) {
    put_u64(out, r.step);
    put_f64(out, r.train_loss);
    put_f64(out, r.eval_loss);
  }
  if (predictor_kind == "oracle") {
    const std::string bytes = encode_dataset(oracle_data);
    put_u64(out, bytes.size());
    out += bytes;
  } else {
    put_u64(out, 0);
  }
  return out;
}

Checkpoint Checkpoint::decode(std::string_view bytes) {
  Cursor cur{bytes};
  if (cur.line() != "bfn-checkpoint") throw std::runtime_error("checkpoint: bad magic line");
  Checkpoint c;
  std::size_t P = 0, H = 0;
  int version = -1;
  std::string config_text;
  bool in_config = false;
  for (;;) {
    const std::string line(cur.line());
    if (line == "[binary]") break;
    if (line == "[config]") {
      in_config = true;
      continue;
    }
    if (in_config) {
      config_text += line + "\n";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("checkpoint: bad header line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "version") version = std::stoi(value);
    else if (key == "predictor") c.predictor_kind = value;
    else if (key == "param_count") P = std::stoull(value);
    else if (key == "history_rows") H = std::stoull(value);
  }
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  if (c.predictor_kind != "mlp" && c.predictor_kind != "oracle")
    throw std::runtime_error("checkpoint: unknown predictor kind");
  c.config = RunConfig::parse(config_text);

  c.params = cur.vec(P);
  c.ema = cur.vec(P);
  c.adam.m = cur.vec(P);
  c.adam.v = cur.vec(P);
  c.adam.step = cur.u64();
  Rng::State s;
  for (auto& w : s) w = cur.u64();
  const std::uint64_t draws = cur.u64();
  c.rng = Rng::from_state(s, draws);
  c.history.resize(H);
  for (auto& r : c.history) {
    r.step = cur.u64();
    r.train_loss = cur.f64();
    r.eval_loss = cur.f64();
  }
  const std::uint64_t ob = cur.u64();
  if (cur.pos + ob != bytes.size()) throw std::runtime_error("checkpoint: trailing or missing bytes");
  if (ob > 0) c.oracle_data = decode_dataset(bytes.substr(cur.pos, ob));
  if (c.predictor_kind == "mlp") {
    const Mlp probe(c.config.predictor_spec());
    if (probe.param_count() != P) throw std::runtime_error("checkpoint: parameter count does not match config");
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const { write_file(path, encode()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) { return decode(read_file(path)); }

}  // namespace bfn
