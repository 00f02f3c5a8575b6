#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxnmt/driver.hpp"
#include "ctxnmt/text.hpp"
#include "unit/helpers.hpp"

using namespace ctxnmt;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> tail(const std::vector<std::string>& lines, std::size_t n) {
  return {lines.end() - static_cast<std::ptrdiff_t>(n), lines.end()};
}

std::string d(const std::string& name) { return testing::data_path(name).string(); }

}  // namespace

TEST_CASE("prepare reproduces the reference layouts") {
  const auto dir = testing::scratch_dir("cli-prepare");
  for (const auto& [mode, layout] : std::map<std::string, std::string>{{"2+1-prefix", "layout_prefix"}, {"2+2", "layout_2plus2"}}) {
    const auto stem = (dir / mode).string();
    const auto r = cli({"--out", dir.string(), "prepare", "--mode", mode, "--source", d("mini.src"), "--target",
                        d("mini.trg"), "--docs", d("mini.docs"), "--stem", stem});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(tail(read_lines(stem + ".src"), 3) == read_lines(d(layout + ".src")));
    CHECK(tail(read_lines(stem + ".trg"), 3) == read_lines(d(layout + ".trg")));
  }
  CHECK(fs::exists(dir / "prepare.manifest.json"));
}

TEST_CASE("synth is deterministic and matches the golden corpus") {
  const auto dir = testing::scratch_dir("cli-synth");
  for (const char* name : {"a", "b"}) {
    const auto r = cli({"--seed", "7", "--out", dir.string(), "synth", "--docs", "6", "--stem", (dir / name).string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  for (const char* ext : {".src", ".trg", ".docs"}) {
    CHECK(read_file(dir / (std::string("a") + ext)) == read_file(dir / (std::string("b") + ext)));
    CHECK(read_file(dir / (std::string("a") + ext)) == read_file(d(std::string("synth_golden") + ext)));
  }
}

TEST_CASE("score matches the committed oracle values") {
  const auto dir = testing::scratch_dir("cli-score");
  const auto r = cli({"--out", dir.string(), "score", "--hyp", d("metric_pairs.hyp"), "--ref", d("metric_pairs.ref"),
                      "--docs", d("metric_pairs.docs"), "--regime", "extended", "--name", "x"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::map<std::string, double> v;
  std::ifstream in(d("metric_values.tsv"));
  std::string key;
  double value;
  while (in >> key >> value) v[key] = value;
  char expected[128];
  std::snprintf(expected, sizeof expected, "x\t%.2f\t%.2f\t%.2f\t%.2f\n", 100 * v["extended_bleu"],
                100 * v["extended_chrf"], 100 * v["extended_chrf_precision"], 100 * v["extended_chrf_recall"]);
  CHECK(r.out.find(expected) != std::string::npos);
}

TEST_CASE("exit codes") {
  const auto dir = testing::scratch_dir("cli-exit");
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"--no-such-flag"}).code == kExitConfig);
  CHECK(cli({"--out", dir.string(), "score", "--hyp", d("metric_pairs.hyp")}).code == kExitConfig);

  const auto cfg = dir / "bad.ini";
  write_file_atomic(cfg, "[model]\nepochs = -3\n");
  const auto bad_cfg = cli({"--config", cfg.string(), "--out", dir.string(), "synth"});
  CHECK(bad_cfg.code == kExitConfig);
  CHECK(bad_cfg.err.find("epochs") != std::string::npos);

  const auto src = dir / "bad.src";
  write_file_atomic(src, "ein satz\nzwei\n");
  write_file_atomic(dir / "bad.trg", "one sentence\n");
  write_file_atomic(dir / "bad.docs", "d\nd\n");
  const auto malformed = cli({"--out", dir.string(), "prepare", "--mode", "2+2", "--source", src.string(), "--target",
                              (dir / "bad.trg").string(), "--docs", (dir / "bad.docs").string()});
  CHECK(malformed.code == kExitMalformedData);

  const auto v = cli({"--version"});
  CHECK(v.code == kExitOk);
  CHECK(v.out.find(kToolkitVersion) != std::string::npos);
}

TEST_CASE("manifest and replay") {
  const auto dir = testing::scratch_dir("cli-replay");
  const auto stem = (dir / "c").string();
  REQUIRE(cli({"--seed", "3", "--out", dir.string(), "synth", "--docs", "4", "--stem", stem}).code == 0);
  const auto manifest = nlohmann::json::parse(read_file(dir / "synth.manifest.json"));
  CHECK(manifest["command"] == "synth");
  CHECK(manifest["version"] == kToolkitVersion);
  CHECK(manifest.contains("outputs"));
  CHECK(manifest.contains("config"));
  const auto first = read_file(stem + ".src");
  fs::remove(stem + ".src");
  const auto r = cli({"replay", "--manifest", (dir / "synth.manifest.json").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_file(stem + ".src") == first);
  CHECK(fs::exists(dir / "synth.replay.ini"));
}
