// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bfn/checkpoint.hpp"
#include "bfn/continuous.hpp"
#include "bfn/dataset.hpp"
#include "bfn/discretised.hpp"
#include "bfn/harness.hpp"
#include "bfn/run_config.hpp"
#include "bfn/toy_data.hpp"
#include "bfn/training.hpp"
#include "cli.hpp"

using namespace bfn;
using harness::PropertyReport;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = BFN_SOURCE_DIR;
constexpr std::uint64_t kSeed = 0;

struct Outcome {
  bool pass = true;
  std::string note;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!note.empty()) note += "; ";
    note += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<PropertyReport> run(std::vector<std::string> filter) {
  harness::SuiteOptions opt;
  opt.seed = kSeed;
  opt.filter = std::move(filter);
  return harness::run_all(opt);
}

// Adds one requirement per report: it passed at its own tolerance.
void require_reports(Outcome& o, const std::vector<PropertyReport>& reports) {
  for (const auto& r : reports)
    o.require(r.pass, r.id + " " + r.statistic + "=" + fmt("%.4g", r.value) + " (tol " + fmt("%g", r.tolerance) + ")");
}

void require_time(Outcome& o, double secs, double budget) {
  o.require(secs < budget, "runtime " + fmt("%.1f", secs) + " s (budget " + fmt("%g", budget) + " s)");
}

// ---- criteria ---------------------------------------------------------------

Outcome exact_identities() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run({"discrete_update_additivity", "precision_additivity", "finite_m_posterior"});
  require_reports(o, r);
  o.require(r[0].samples == 1000 && r[0].tolerance == 1e-12, "10^3 cases at 1e-12");
  o.require(r[2].tolerance == 1e-10, "finite-m posterior at 1e-10");
  require_time(o, seconds_since(t0), 10);
  return o;
}

Outcome distributional_additivity() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run({"additivity", "flow"});
  require_reports(o, r);
  for (const auto& p : r)
    if (p.id != "flow_prior_at_zero")
      o.require(p.tolerance <= 0.015 && p.samples >= 100000, p.id + " tolerance <= 1.5% over >= 10^5 trials");
  require_time(o, seconds_since(t0), 120);
  return o;
}

Outcome kl_continuous() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run({"kl_continuous_closed_form"});
  require_reports(o, r);
  o.require(r[0].samples == 5000000 && r[0].tolerance == 3.0, "5 configs x 10^6 samples, 3 SE");
  require_time(o, seconds_since(t0), 120);
  return o;
}

Outcome convergence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run({"convergence_continuous", "convergence_discretised", "convergence_discrete"});
  require_reports(o, r);
  o.require(r[0].tolerance == 0.005 && r[1].tolerance == 0.01 && r[2].tolerance == 0.01,
            "final gap tolerances 0.5% / 1% / 1%");
  require_time(o, seconds_since(t0), 300);
  return o;
}

Outcome finite_m() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  require_reports(o, run({"finite_m"}));
  require_time(o, seconds_since(t0), 120);
  return o;
}

Outcome gradients() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run({"gradients"});
  require_reports(o, r);
  for (const auto& p : r) o.require(p.samples >= 50 && p.tolerance == 1e-5, p.id + " >= 50 parameters at 1e-5");
  require_time(o, seconds_since(t0), 60);
  return o;
}

Outcome golden() {
  Outcome o;
  // bin 110 counted from 1 is index 109 counted from 0
  const double c = discretised::BinGeometry(256).center(110 - 1);
  o.require(c == -0.14453125, "centre of bin 110 (1-based) = " + fmt("%.17g", c));
  const std::uint8_t px = 109;
  const auto ds = ingest_pixels(std::span<const std::uint8_t>(&px, 1), 1, Modality::discretised, 256);
  o.require(ds.centers(0)[0] == -0.14453125, "intensity 109 ingests to that centre");
  return o;
}

Outcome schedules() {
  Outcome o;
  require_reports(o, run({"schedule_telescoping", "entropy_linearity_continuous", "schedule_presets"}));
  return o;
}

// Posterior mean under the generating 4-mode mixture, the best any predictor
// can do on the continuous toy.
class MixturePosterior final : public Predictor {
 public:
  explicit MixturePosterior(continuous::Config cfg) : cfg_(cfg) {}
  std::size_t input_width() const override { return 2; }
  std::size_t output_width() const override { return 2; }
  Vec forward(std::span<const double> mu, double t) const override {
    const double g = cfg_.schedule().gamma(t), v = (1.0 - g) / g, s2 = 0.1 * 0.1;
    Vec eps(2);
    for (int d = 0; d < 2; ++d) {
      const double z = mu[d] / g;
      double lw[2], m[2];
      for (int c = 0; c < 2; ++c) {
        const double centre = c ? 0.5 : -0.5;
        lw[c] = log_gaussian_pdf(z, centre, s2 + v);
        m[c] = centre + s2 / (s2 + v) * (z - centre);
      }
      const double w1 = 1.0 / (1.0 + std::exp(lw[0] - lw[1]));
      const double xh = (1.0 - w1) * m[0] + w1 * m[1];
      eps[d] = (mu[d] - g * xh) / std::sqrt(g * (1.0 - g));
    }
    return eps;
  }

 private:
  continuous::Config cfg_;
};

struct ToyRun {
  double initial = 0, final_loss = 0, secs = 0;
  int steps = 0;
  Checkpoint ck;
};

ToyRun train_toy(const std::string& name) {
  const fs::path path = kSource / "configs" / name;
  const RunConfig cfg = RunConfig::from_file(path);
  const Dataset ds = read_dataset(path.parent_path() / cfg.get("dataset"));
  const TrainConfig tc = cfg.train();
  ToyRun r;
  const auto t0 = std::chrono::steady_clock::now();
  TrainState st(cfg.model(), cfg.predictor_spec(), tc);
  r.initial = mean_cts_loss(st.ema_net(), st.model, ds, tc.seed ^ 0x5eedULL, tc.eval_passes);
  train_steps(st, ds, tc.steps);
  r.final_loss = mean_cts_loss(st.ema_net(), st.model, ds, tc.seed ^ 0x5eedULL, tc.eval_passes);
  r.secs = seconds_since(t0);
  r.steps = tc.steps;
  r.ck = Checkpoint::from_state(st, cfg);
  return r;
}

Outcome toy_training() {
  Outcome o;
  const ToyRun text = train_toy("text_toy.cfg");
  o.require(text.steps <= 2000, "text toy " + std::to_string(text.steps) + " steps");
  o.require(text.final_loss < 0.1 * text.initial,
            "text toy loss " + fmt("%.4g", text.initial) + " -> " + fmt("%.4g", text.final_loss) + " nats (< 10%)");
  require_time(o, text.secs, 300);

  const auto pred = text.ck.predictor();
  const ModelConfig model = text.ck.model();
  Rng rng(kSeed);
  int memorised = 0;
  for (int i = 0; i < 100; ++i) {
    const Sample s = generate(rng, *pred, model, 100);
    const std::string str = Alphabet::latin27().decode(s.indices);
    for (const auto& m : toy::strings()) memorised += str == m;
  }
  o.require(memorised >= 90, std::to_string(memorised) + "/100 samples (n=100) are memorised strings");

  const ToyRun mix = train_toy("mixture_toy.cfg");
  const ModelConfig mm = mix.ck.model();
  const RunConfig mcfg = RunConfig::from_file(kSource / "configs" / "mixture_toy.cfg");
  const Dataset mds = read_dataset(kSource / "data" / "mixture.bfnd");
  const MixturePosterior best(mm.continuous_config());
  const double floor = mean_cts_loss(best, mm, mds, mcfg.train().seed ^ 0x5eedULL, mcfg.train().eval_passes);
  const double achieved = (mix.initial - mix.final_loss) / (mix.initial - floor);
  o.require(mix.steps <= 2000 && achieved >= 0.9,
            "continuous toy loss " + fmt("%.4g", mix.initial) + " -> " + fmt("%.4g", mix.final_loss) +
                " with optimum " + fmt("%.4g", floor) + ", " + fmt("%.1f", 100 * achieved) +
                "% of the achievable reduction (>= 90%)");
  require_time(o, mix.secs, 300);
  return o;
}

// ---- determinism --------------------------------------------------------------

int cli_quiet(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::fprintf(stderr, "bfn %s failed: %s\n", args[0].c_str(), err.str().c_str());
  return code;
}

std::string cli_output(std::vector<std::string> args) {
  std::ostringstream out, err;
  cli::run(args, out, err);
  return out.str();
}

std::string dir_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + read_file(f);
  return all;
}

Outcome determinism() {
  Outcome o;
  const fs::path tmp = fs::temp_directory_path() / "bfn_acceptance";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  auto p = [&](const std::string& f) { return (tmp / f).string(); };
  const std::string cfg = (kSource / "configs" / "text_toy.cfg").string();

  bool ok = cli_quiet({"toy", "-o", p("toy_a")}) == 0 && cli_quiet({"toy", "-o", p("toy_b")}) == 0;
  o.require(ok && dir_bytes(p("toy_a")) == dir_bytes(p("toy_b")) &&
                dir_bytes(p("toy_a")) == dir_bytes(kSource / "data"),
            "toy data generation reproduces the bundled files");

  ok = cli_quiet({"train", cfg, "-q", "--set", "steps=200", "--checkpoint", p("a.ckpt"), "--history", p("a.csv")}) == 0 &&
       cli_quiet({"train", cfg, "-q", "--set", "steps=200", "--checkpoint", p("b.ckpt"), "--history", p("b.csv"),
                  "--threads", "2"}) == 0;
  o.require(ok && read_file(p("a.ckpt")) == read_file(p("b.ckpt")) && read_file(p("a.csv")) == read_file(p("b.csv")),
            "train: identical checkpoint and history bytes (1 and 2 threads)");

  const std::string bytes = read_file(p("a.ckpt"));
  o.require(Checkpoint::decode(bytes).encode() == bytes, "checkpoint decode/encode byte-identical");
  Checkpoint::load(p("a.ckpt")).save(p("c.ckpt"));
  o.require(read_file(p("c.ckpt")) == bytes, "checkpoint load/save byte-identical");

  const std::string ds = (kSource / "data" / "text.bfnd").string();
  const std::vector<std::string> eval = {"eval", p("a.ckpt"), "--dataset", ds, "--n", "10,25", "--passes", "2", "--seed", "5"};
  o.require(cli_output(eval) == cli_output(eval), "eval: identical tables");

  ok = cli_quiet({"sample", p("a.ckpt"), "--count", "5", "--steps", "50", "--seed", "3", "-o", p("s1")}) == 0 &&
       cli_quiet({"sample", p("a.ckpt"), "--count", "5", "--steps", "50", "--seed", "3", "-o", p("s2")}) == 0;
  o.require(ok && dir_bytes(p("s1")) == dir_bytes(p("s2")), "sample: identical files");

  ok = cli_quiet({"verify", "--filter", "identities,kl_zero_at_data", "--seed", "4", "--report", p("r1.tsv")}) == 0 &&
       cli_quiet({"verify", "--filter", "identities,kl_zero_at_data", "--seed", "4", "--report", p("r2.tsv")}) == 0;
  o.require(ok && read_file(p("r1.tsv")) == read_file(p("r2.tsv")), "verify: identical reports");

  for (const char* name : {"glyphs.bfnd", "text.bfnd", "mixture.bfnd"}) {
    const std::string d = read_file(kSource / "data" / name);
    write_dataset(decode_dataset(d), p(std::string("rt_") + name));
    o.require(read_file(p(std::string("rt_") + name)) == d, std::string(name) + " round trip byte-identical");
  }
  fs::remove_all(tmp);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* title;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "exact identities", exact_identities},
      {2, "distributional additivity and flow equivalence", distributional_additivity},
      {3, "continuous KL closed form", kl_continuous},
      {4, "n-step loss converges to the continuous-time loss", convergence},
      {5, "multinomial limit of the discrete sender", finite_m},
      {6, "gradient correctness", gradients},
      {7, "bin-centre golden value", golden},
      {8, "schedule checks", schedules},
      {9, "end-to-end toy training", toy_training},
      {10, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %2d %s  %s (%.1f s): %s\n", c.number, o.pass ? "PASS" : "FAIL", c.title,
                seconds_since(t0), o.note.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
