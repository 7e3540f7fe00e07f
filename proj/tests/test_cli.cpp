#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "bfn/anymap.hpp"
#include "bfn/checkpoint.hpp"
#include "bfn/dataset.hpp"
#include "bfn/toy_data.hpp"
#include "cli.hpp"

using namespace bfn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("bfn_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

struct Run {
  int code;
  std::string out, err;
};

Run bfn_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = bfn::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("alphabet order gives 0-based indices") {
    const auto a = Alphabet::latin27();
    CHECK(a.size() == 27);
    CHECK(a.encode("abc ") == std::vector<int>{0, 1, 2, 26});
    CHECK(a.decode(std::vector<int>{7, 8, 26}) == "hi ");
  }

  TEST_CASE("unknown symbols name their byte offset") {
    const auto a = Alphabet::latin27();
    try {
      a.encode("ab!d");
      FAIL("expected an error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("offset 2") != std::string::npos);
    }
  }

  TEST_CASE("alphabet files") {
    const auto a = Alphabet::parse("x\n \n\\n\n");
    CHECK(a.symbols == std::vector<std::string>{"x", " ", "\n"});
    CHECK_THROWS(Alphabet::parse("x\nx\n"));
  }

  TEST_CASE("pixel ingest") {
    const std::vector<std::uint8_t> px{0, 109, 255, 128};
    const auto ds = ingest_pixels(px, 2, Modality::discretised, 256);
    CHECK(ds.index(0)[1] == 109);
    CHECK(ds.centers(0)[1] == -0.14453125);
    CHECK(export_pixels(ds) == px);
    const auto c = ingest_pixels(px, 4, Modality::continuous, 0);
    CHECK(c.real(0)[0] == -1.0);
    CHECK(export_pixels(c) == px);
    CHECK_THROWS(ingest_pixels(px, 3, Modality::continuous, 0));
  }

  TEST_CASE("dataset codec round trip") {
    for (const auto& ds : {toy::glyphs(), toy::text(), toy::mixture(20, 1)}) {
      const std::string bytes = encode_dataset(ds);
      CHECK(encode_dataset(decode_dataset(bytes)) == bytes);
    }
    std::string bad = encode_dataset(toy::text());
    bad[0] = 'X';
    CHECK_THROWS(decode_dataset(bad));
  }

  TEST_CASE("text toy export reproduces the corpus") {
    std::string corpus;
    for (const auto& s : toy::strings()) corpus += s + "\n";
    CHECK(export_text(toy::text(), Alphabet::latin27(), true) == corpus);
  }

  TEST_CASE("anymap codec") {
    Anymap img{3, 2, 1, {0, 1, 2, 3, 4, 5}};
    const std::string bytes = encode_anymap(img);
    CHECK(bytes.rfind("P5\n3 2\n255\n", 0) == 0);
    const Anymap back = decode_anymap(bytes);
    CHECK(back.pixels == img.pixels);
    CHECK(decode_anymap("P5 # c\n3 2\n255\n" + std::string(6, 'a')).width == 3);
    CHECK_THROWS(decode_anymap("P2\n1 1\n255\n0"));
  }
}

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    CHECK(bfn_cli({}).code == 2);
    CHECK(bfn_cli({"frobnicate"}).code == 2);
    const auto r = bfn_cli({"verify", "--filter", "no_such_group", "--report", ""});
    CHECK(r.code == 2);
    CHECK(r.err.find("no_such_group") != std::string::npos);
    CHECK(bfn_cli({"verify", "--mutate", "bogus", "--report", ""}).code == 2);
    CHECK(bfn_cli({"--help"}).code == 0);
  }

  TEST_CASE("verify filters and writes a report") {
    TempDir d("verify");
    const auto r = bfn_cli({"verify", "--filter", "schedule", "--report", d / "r.tsv"});
    CHECK(r.code == 0);
    const std::string report = read_file(d / "r.tsv");
    int lines = 0;
    for (char c : report) lines += c == '\n';
    CHECK(lines == 6);
    CHECK(report.find("group=additivity") == std::string::npos);
    CHECK(bfn_cli({"verify", "--filter", "schedule_telescoping", "--mutate", "alpha_weighting", "--report", ""}).code == 1);
  }

  TEST_CASE("text ingest and export round trip") {
    TempDir d("text");
    write_file(d / "in.txt", "abc \nzzz \n");
    CHECK(bfn_cli({"ingest", d / "in.txt", "-o", d / "t.bfnd", "--alphabet", "latin27"}).code == 0);
    const Dataset ds = read_dataset(d / "t.bfnd");
    CHECK(ds.dim == 4);
    CHECK(ds.index(0)[3] == 26);
    CHECK(bfn_cli({"export", d / "t.bfnd", "-o", d / "out.txt", "--alphabet", "latin27"}).code == 0);
    CHECK(read_file(d / "out.txt") == "abc \nzzz \n");

    write_file(d / "bad.txt", "ab?d");
    const auto r = bfn_cli({"ingest", d / "bad.txt", "-o", d / "x.bfnd", "--alphabet", "latin27", "--length", "4"});
    CHECK(r.code == 1);
    CHECK(r.err.find("offset 2") != std::string::npos);
  }

  TEST_CASE("pixel ingest and export round trip") {
    TempDir d("pixels");
    Anymap img{4, 2, 1, {0, 10, 109, 200, 255, 3, 4, 5}};
    write_anymap(d / "img.pgm", img);
    CHECK(bfn_cli({"ingest", d / "img.pgm", "-o", d / "p.bfnd", "--modality", "discretised", "--dim", "4"}).code == 0);
    const Dataset ds = read_dataset(d / "p.bfnd");
    CHECK(ds.size() == 2);
    CHECK(ds.centers(0)[2] == -0.14453125);
    CHECK(bfn_cli({"export", d / "p.bfnd", "-o", d / "back.pgm", "--format", "anymap", "--width", "4"}).code == 0);
    CHECK(read_file(d / "back.pgm") == read_file(d / "img.pgm"));

    write_file(d / "dec.txt", "1 2 300 4");
    const auto r = bfn_cli({"ingest", d / "dec.txt", "-o", d / "q.bfnd", "--format", "decimal", "--dim", "2",
                        "--modality", "continuous"});
    CHECK(r.code == 1);
    CHECK(r.err.find("pixel 2") != std::string::npos);
  }

  TEST_CASE("train, eval and sample an oracle model") {
    TempDir d("oracle");
    CHECK(bfn_cli({"toy", "-o", d / "data"}).code == 0);
    write_file(d / "oracle.cfg",
               "modality = discrete\ndim = 16\nclasses = 27\nschedule = text\npredictor = oracle\n"
               "dataset = data/text.bfnd\n");
    CHECK(bfn_cli({"train", d / "oracle.cfg", "--checkpoint", d / "o.ckpt"}).code == 0);
    const auto ev = bfn_cli({"eval", d / "o.ckpt", "--dataset", d / "data/text.bfnd", "--n", "10,100", "--passes", "2",
                         "--csv", d / "t.csv"});
    CHECK(ev.code == 0);
    CHECK(ev.out.find("inf") != std::string::npos);
    CHECK(read_file(d / "t.csv").find("recon,0,0,0,2") != std::string::npos);

    CHECK(bfn_cli({"sample", d / "o.ckpt", "--count", "0", "-o", d / "none"}).code == 0);
    CHECK_FALSE(fs::exists(d / "none"));
    CHECK(bfn_cli({"sample", d / "o.ckpt", "--count", "8", "--steps", "20", "-o", d / "s"}).code == 0);
    const std::string samples = read_file(d / "s/samples.txt");
    std::istringstream lines(samples);
    std::string line;
    int memorised = 0;
    while (std::getline(lines, line))
      for (const auto& s : toy::strings()) memorised += line == s;
    CHECK(memorised == 8);

    // mismatched dataset
    CHECK(bfn_cli({"eval", d / "o.ckpt", "--dataset", d / "data/glyphs.bfnd"}).code == 1);
  }

  TEST_CASE("train rejects a missing dataset before computing") {
    TempDir d("missing");
    write_file(d / "a.cfg", "modality = discrete\ndim = 16\nclasses = 27\n");
    CHECK(bfn_cli({"train", d / "a.cfg"}).code == 2);
    write_file(d / "b.cfg", "modality = discrete\ndim = 16\nclasses = 27\ndataset = nowhere.bfnd\n");
    CHECK(bfn_cli({"train", d / "b.cfg"}).code == 2);
    CHECK(bfn_cli({"toy", "-o", d / "data"}).code == 0);
    write_file(d / "c.cfg", "modality = discrete\ndim = 8\nclasses = 27\ndataset = data/text.bfnd\n");
    CHECK(bfn_cli({"train", d / "c.cfg"}).code == 1);
  }
}
