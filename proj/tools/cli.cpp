#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bfn/anymap.hpp"
#include "bfn/checkpoint.hpp"
#include "bfn/dataset.hpp"
#include "bfn/harness.hpp"
#include "bfn/model.hpp"
#include "bfn/run_config.hpp"
#include "bfn/toy_data.hpp"
#include "bfn/training.hpp"

namespace fs = std::filesystem;

namespace bfn::cli {

namespace {

// Raised for bad arguments discovered after parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

std::vector<std::uint8_t> decimal_pixels(const std::string& text) {
  std::vector<std::uint8_t> px;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    long v = -1;
    try {
      std::size_t used = 0;
      v = std::stol(tok, &used);
      if (used != tok.size()) v = -1;
    } catch (const std::exception&) {
      v = -1;
    }
    if (v < 0 || v > 255)
      throw DomainError("pixel " + std::to_string(px.size()) + " ('" + tok + "') is outside 0..255");
    px.push_back(static_cast<std::uint8_t>(v));
  }
  return px;
}

Alphabet load_alphabet(const std::string& path) {
  if (path.empty() || path == "latin27") return Alphabet::latin27();
  return Alphabet::from_file(path);
}

std::string alphabet_file(const Alphabet& a) {
  std::string s;
  for (const auto& sym : a.symbols) {
    if (sym == "\n") s += "\\n";
    else if (sym == "\t") s += "\\t";
    else s += sym;
    s += "\n";
  }
  return s;
}

fs::path resolve_near(const fs::path& base_file, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base_file.empty()) return path;
  return base_file.parent_path() / path;
}

// Image geometry for items of `dim` values.
struct Geometry {
  int width = 0, height = 0, channels = 1;
};

Geometry geometry_for(std::size_t dim, int width, int channels) {
  Geometry g;
  g.channels = channels;
  if (channels != 1 && channels != 3) throw UsageError("--channels must be 1 or 3");
  if (dim % channels) throw UsageError("item size is not a multiple of the channel count");
  const std::size_t px = dim / channels;
  if (width <= 0) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(px))));
    width = static_cast<int>(side * side == px ? side : px);
  }
  if (px % width) throw UsageError("item size is not a multiple of --width");
  g.width = width;
  g.height = static_cast<int>(px / width);
  return g;
}

// ---- ingest / export / toy --------------------------------------------------

struct IngestOpts {
  std::string input, output, format = "auto", modality = "discrete", alphabet;
  std::size_t dim = 0, length = 0;
  int classes = 0;
};

int cmd_ingest(const IngestOpts& o, std::ostream& out) {
  std::string fmt = o.format;
  const std::string bytes = read_file(o.input);
  if (fmt == "auto") {
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) fmt = "anymap";
    else if (!o.alphabet.empty()) fmt = "text";
    else fmt = "raw";
  }
  Dataset ds;
  const Modality m = modality_from_string(o.modality);
  if (fmt == "text") {
    if (m != Modality::discrete) throw UsageError("text input needs --modality discrete");
    const Alphabet a = load_alphabet(o.alphabet.empty() ? "latin27" : o.alphabet);
    ds = ingest_text(bytes, a, o.length);
  } else {
    std::vector<std::uint8_t> px;
    std::size_t dim = o.dim;
    if (fmt == "anymap") {
      const Anymap img = decode_anymap(bytes);
      px = img.pixels;
      if (dim == 0) dim = px.size();
    } else if (fmt == "raw") {
      px.assign(bytes.begin(), bytes.end());
    } else if (fmt == "decimal") {
      px = decimal_pixels(bytes);
    } else {
      throw UsageError("unknown --format '" + fmt + "'");
    }
    if (dim == 0) throw UsageError("--dim is required for " + fmt + " input");
    int classes = o.classes;
    if (m != Modality::continuous && classes == 0) classes = m == Modality::discrete ? 2 : 256;
    ds = ingest_pixels(px, dim, m, classes);
  }
  write_dataset(ds, o.output);
  out << "wrote " << ds.size() << " items of " << ds.dim << " (" << to_string(ds.modality);
  if (ds.modality != Modality::continuous) out << ", " << ds.classes << " classes";
  out << ") to " << o.output << "\n";
  return 0;
}

struct ExportOpts {
  std::string input, output, format = "auto", alphabet;
  bool lines = true;
  int width = 0, channels = 1;
};

int cmd_export(const ExportOpts& o, std::ostream& out) {
  const Dataset ds = read_dataset(o.input);
  std::string fmt = o.format;
  if (fmt == "auto") fmt = o.alphabet.empty() ? "raw" : "text";
  if (fmt == "text") {
    if (ds.modality != Modality::discrete) throw UsageError("text export needs a discrete dataset");
    write_file(o.output, export_text(ds, load_alphabet(o.alphabet), o.lines));
  } else if (fmt == "raw") {
    const auto px = export_pixels(ds);
    write_file(o.output, std::string(px.begin(), px.end()));
  } else if (fmt == "anymap") {
    const Geometry g = geometry_for(ds.dim, o.width, o.channels);
    Anymap img;
    img.width = g.width;
    img.height = g.height * static_cast<int>(ds.size());
    img.channels = g.channels;
    img.pixels = export_pixels(ds);
    write_anymap(o.output, img);
  } else {
    throw UsageError("unknown --format '" + fmt + "'");
  }
  out << "wrote " << ds.size() << " items to " << o.output << "\n";
  return 0;
}

int cmd_toy(const std::string& dir, std::ostream& out) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_dataset(toy::glyphs(), d / "glyphs.bfnd");
  write_dataset(toy::text(), d / "text.bfnd");
  write_dataset(toy::mixture(), d / "mixture.bfnd");
  write_file(d / "alphabet.txt", alphabet_file(Alphabet::latin27()));
  std::string corpus;
  for (const auto& s : toy::strings()) corpus += s + "\n";
  write_file(d / "text.txt", corpus);
  out << "wrote glyphs.bfnd, text.bfnd, mixture.bfnd, alphabet.txt, text.txt to " << dir << "\n";
  return 0;
}

// ---- train / eval / sample -------------------------------------------------

struct TrainOpts {
  std::string config;
  std::vector<std::string> overrides;
  std::string checkpoint, history;
  int threads = 1;
  bool quiet = false;
};

int cmd_train(const TrainOpts& o, std::ostream& out) {
  RunConfig cfg = RunConfig::from_file(o.config);
  for (const auto& s : o.overrides) cfg.apply_override(s);
  const std::string ds_key = cfg.get("dataset");
  if (ds_key.empty()) throw UsageError("no dataset: set dataset= in the config or pass --set dataset=PATH");
  const fs::path ds_path = resolve_near(o.config, ds_key);
  if (!fs::exists(ds_path)) throw UsageError("dataset not found: " + ds_path.string());
  const Dataset ds = read_dataset(ds_path);
  const ModelConfig model = cfg.model();
  model.check_dataset(ds);
  const std::string ckpt = o.checkpoint.empty() ? cfg.get("checkpoint") : o.checkpoint;
  const std::string hist = o.history.empty() ? cfg.get("history") : o.history;

  if (cfg.get("predictor") == "oracle") {
    Checkpoint::oracle(cfg, ds).save(ckpt);
    out << "wrote oracle checkpoint over " << ds.size() << " items to " << ckpt << "\n";
    return 0;
  }
  const TrainConfig tc = cfg.train();
  TrainState st(model, cfg.predictor_spec(), tc);
  const double initial = mean_cts_loss(st.ema_net(), model, ds, tc.seed ^ 0x5eedULL, tc.eval_passes, o.threads);
  TrainOptions opt;
  opt.threads = o.threads;
  const int every = std::max(1, tc.steps / 10);
  opt.on_step = [&](const HistoryRow& r) {
    if (o.quiet) return;
    if (r.step % every == 0 || static_cast<int>(r.step) == tc.steps) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "step %llu  train %.6g", static_cast<unsigned long long>(r.step),
                    r.train_loss);
      out << buf;
      if (!std::isnan(r.eval_loss)) {
        std::snprintf(buf, sizeof buf, "  eval %.6g", r.eval_loss);
        out << buf;
      }
      out << "\n";
    }
  };
  train_steps(st, ds, tc.steps, opt);
  const double final_loss = mean_cts_loss(st.ema_net(), model, ds, tc.seed ^ 0x5eedULL, tc.eval_passes, o.threads);
  Checkpoint::from_state(st, cfg).save(ckpt);
  if (!hist.empty()) write_file(hist, history_csv(st.history));
  char buf[256];
  const double dims = static_cast<double>(ds.dim);
  std::snprintf(buf, sizeof buf,
                "initial_loss %.6g nats (%.6g bits/dim)\nfinal_loss %.6g nats (%.6g bits/dim)\n", initial,
                initial / dims / std::log(2.0), final_loss, final_loss / dims / std::log(2.0));
  out << buf;
  if (!st.history.empty()) {
    std::snprintf(buf, sizeof buf, "final_train_loss %.6g\n", st.history.back().train_loss);
    out << buf;
  }
  out << "checkpoint " << ckpt << "\n";
  return 0;
}

struct EvalOpts {
  std::string checkpoint, dataset, n_list = "10,25,50,100", csv;
  int passes = 4, threads = 1;
  std::uint64_t seed = 0;
  bool raw = false, no_recon = false;
};

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  const Checkpoint ck = Checkpoint::load(o.checkpoint);
  const Dataset ds = read_dataset(o.dataset);
  const ModelConfig model = ck.model();
  model.check_dataset(ds);
  const auto ns = parse_int_list(o.n_list, "--n");
  if (o.passes < 1) throw UsageError("--passes must be at least 1");
  const auto pred = ck.predictor(!o.raw);
  const EvalTable table = evaluate(*pred, model, ds, ns, o.passes, o.seed, o.threads, !o.no_recon);
  out << table.to_text();
  if (!o.csv.empty()) write_file(o.csv, table.to_csv());
  return 0;
}

struct SampleOpts {
  std::string checkpoint, output = "samples", alphabet;
  int steps = 100, count = 16, width = 0, channels = 1;
  std::uint64_t seed = 0;
  bool raw = false;
};

int cmd_sample(const SampleOpts& o, std::ostream& out) {
  if (o.steps < 1) throw UsageError("--steps must be at least 1");
  if (o.count < 0) throw UsageError("--count must be non-negative");
  const Checkpoint ck = Checkpoint::load(o.checkpoint);
  const ModelConfig model = ck.model();
  if (o.count == 0) {
    out << "no samples requested\n";
    return 0;
  }
  const auto pred = ck.predictor(!o.raw);
  Rng rng(o.seed);
  Dataset ds;
  ds.modality = model.modality;
  ds.dim = model.dim;
  ds.classes = model.classes;
  for (int i = 0; i < o.count; ++i) {
    const Sample s = generate(rng, *pred, model, o.steps);
    if (model.modality == Modality::continuous) ds.push_real(s.reals);
    else ds.push_index(s.indices);
  }
  fs::create_directories(o.output);
  const bool text = model.modality == Modality::discrete &&
                    (!o.alphabet.empty() || model.classes != 2);
  if (text) {
    if (o.alphabet.empty() && model.classes != 27)
      throw UsageError("--alphabet is required for discrete models with " + std::to_string(model.classes) +
                       " classes");
    const fs::path p = fs::path(o.output) / "samples.txt";
    write_file(p, export_text(ds, load_alphabet(o.alphabet), true));
    out << "wrote " << o.count << " samples to " << p.string() << "\n";
    return 0;
  }
  const Geometry g = geometry_for(model.dim, o.width, o.channels);
  std::vector<std::uint8_t> px;
  if (model.modality == Modality::discrete)
    for (int v : ds.indices) px.push_back(v ? 255 : 0);
  else
    px = export_pixels(ds);
  const std::size_t per = model.dim;
  for (int i = 0; i < o.count; ++i) {
    Anymap img;
    img.width = g.width;
    img.height = g.height;
    img.channels = g.channels;
    img.pixels.assign(px.begin() + i * per, px.begin() + (i + 1) * per);
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04d.%s", i, g.channels == 1 ? "pgm" : "ppm");
    write_anymap(fs::path(o.output) / name, img);
  }
  out << "wrote " << o.count << " images to " << o.output << "\n";
  return 0;
}

// ---- verify -----------------------------------------------------------------

struct VerifyOpts {
  std::uint64_t seed = 0;
  std::vector<std::string> filter;
  std::string report = "verify_report.tsv", mutate = "none";
  int threads = 1;
};

int cmd_verify(const VerifyOpts& o, std::ostream& out) {
  harness::SuiteOptions so;
  so.seed = o.seed;
  so.threads = o.threads;
  for (const auto& f : o.filter) {
    std::stringstream ss(f);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) so.filter.push_back(item);
  }
  try {
    so.mutation = harness::mutation_from_string(o.mutate);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::vector<harness::PropertyReport> reports;
  try {
    reports = harness::run_all(so);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!o.report.empty()) write_file(o.report, harness::report_lines(reports));
  out << harness::summary(reports);
  return harness::all_passed(reports) ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian flow network toolkit", "bfn"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  IngestOpts io;
  auto* ingest = app.add_subcommand("ingest", "Convert images or text into a dataset file");
  ingest->add_option("input", io.input, "Input file")->required();
  ingest->add_option("-o,--output", io.output, "Dataset file to write")->required();
  ingest->add_option("--format", io.format, "auto, text, raw, anymap or decimal")->capture_default_str();
  ingest->add_option("--modality", io.modality, "continuous, discretised or discrete")->capture_default_str();
  ingest->add_option("--dim", io.dim, "Values per item (pixels); anymap default: whole image");
  ingest->add_option("--classes", io.classes, "Bins or classes (default 256 discretised, 2 discrete)");
  ingest->add_option("--alphabet", io.alphabet, "Alphabet file, one symbol per line, or 'latin27'");
  ingest->add_option("--length", io.length, "Symbols per text item; 0 means one item per line")
      ->capture_default_str();

  ExportOpts eo;
  auto* exp = app.add_subcommand("export", "Write a dataset back out as pixels or text");
  exp->add_option("input", eo.input, "Dataset file")->required();
  exp->add_option("-o,--output", eo.output, "Output file")->required();
  exp->add_option("--format", eo.format, "auto, raw, anymap or text")->capture_default_str();
  exp->add_option("--alphabet", eo.alphabet, "Alphabet for text export");
  exp->add_option("--width", eo.width, "Image width for anymap export");
  exp->add_option("--channels", eo.channels, "1 (grey) or 3 (colour)")->capture_default_str();
  bool joined = false;
  exp->add_flag("--joined", joined, "Concatenate text items without newlines");

  std::string toy_dir = "data";
  auto* toy = app.add_subcommand("toy", "Write the bundled toy datasets");
  toy->add_option("-o,--output", toy_dir, "Directory")->capture_default_str();

  TrainOpts to;
  auto* train = app.add_subcommand("train", "Train with the continuous-time loss");
  train->add_option("config", to.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  train->add_option("--set", to.overrides, "Override a config key (key=value), repeatable");
  train->add_option("--checkpoint", to.checkpoint, "Checkpoint path (default: config 'checkpoint')");
  train->add_option("--history", to.history, "Loss history CSV (default: config 'history')");
  train->add_option("--threads", to.threads, "Worker threads")->capture_default_str();
  train->add_flag("-q,--quiet", to.quiet, "Only print the final summary");

  EvalOpts ev;
  auto* eval = app.add_subcommand("eval", "Loss table over n-step and continuous-time losses");
  eval->add_option("checkpoint", ev.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", ev.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  eval->add_option("--n", ev.n_list, "Comma-separated step counts")->capture_default_str();
  eval->add_option("--passes", ev.passes, "Loss samples per item")->capture_default_str();
  eval->add_option("--seed", ev.seed, "Seed")->capture_default_str();
  eval->add_option("--csv", ev.csv, "Also write the table as CSV");
  eval->add_option("--threads", ev.threads, "Worker threads")->capture_default_str();
  eval->add_flag("--raw", ev.raw, "Use raw instead of EMA parameters");
  eval->add_flag("--no-recon", ev.no_recon, "Skip the reconstruction row");

  SampleOpts so;
  auto* sample = app.add_subcommand("sample", "Generate samples");
  sample->add_option("checkpoint", so.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  sample->add_option("--steps", so.steps, "Generation steps n")->capture_default_str();
  sample->add_option("--count", so.count, "Number of samples")->capture_default_str();
  sample->add_option("-o,--output", so.output, "Output directory")->capture_default_str();
  sample->add_option("--seed", so.seed, "Seed")->capture_default_str();
  sample->add_option("--alphabet", so.alphabet, "Alphabet for discrete text output");
  sample->add_option("--width", so.width, "Image width (default: square when possible)");
  sample->add_option("--channels", so.channels, "1 (greymap) or 3 (pixmap)")->capture_default_str();
  sample->add_flag("--raw", so.raw, "Use raw instead of EMA parameters");

  VerifyOpts vo;
  auto* verify = app.add_subcommand("verify", "Run the property suite");
  verify->add_option("--seed", vo.seed, "Suite seed")->capture_default_str();
  verify->add_option("--filter", vo.filter, "Groups or property ids (comma-separated or repeated)");
  verify->add_option("--report", vo.report, "Report file (empty: none)")->capture_default_str();
  verify->add_option("--threads", vo.threads, "Worker threads")->capture_default_str();
  verify->add_option("--mutate", vo.mutate)->group("");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(io, out);
    if (*exp) {
      eo.lines = !joined;
      return cmd_export(eo, out);
    }
    if (*toy) return cmd_toy(toy_dir, out);
    if (*train) return cmd_train(to, out);
    if (*eval) return cmd_eval(ev, out);
    if (*sample) return cmd_sample(so, out);
    if (*verify) return cmd_verify(vo, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace bfn::cli
