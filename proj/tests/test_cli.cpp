#include <sys/wait.h>

#include <cstdio>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace fs = std::filesystem;
using testing_support::read_file;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with `args`, capturing stdout and stderr.
Run cli(const std::string& args, const fs::path& scratch) {
  const auto err_file = scratch / "stderr.txt";
  const std::string cmd = std::string(RESREC_CLI_PATH) + " " + args + " 2>" + err_file.string();
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = read_file(err_file);
  return r;
}

// Small settings shared by the pipeline steps.
std::string small(const fs::path& out) {
  return "--out " + out.string() +
         " --count 6 --min-dim 3 --max-dim 4 --min-size 100 --max-size 140"
         " --min-minor-fraction 0.2 --max-minor-fraction 0.35 --k 3 --k-prime 2"
         " --mult-min 1.5 --mult-max 2.5 --mult-step 0.5 --seed 11";
}

}  // namespace

TEST(Cli, GenIsDeterministic) {
  const auto dir = testing_support::scratch_dir("cli-gen");
  ASSERT_EQ(cli("gen " + small(dir / "a"), dir).status, 0);
  ASSERT_EQ(cli("gen " + small(dir / "b"), dir).status, 0);
  const auto a = nlohmann::json::parse(read_file(dir / "a" / "datasets" / "manifest.json"));
  const auto b = nlohmann::json::parse(read_file(dir / "b" / "datasets" / "manifest.json"));
  ASSERT_EQ(a.at("datasets").size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a["datasets"][i]["hash"], b["datasets"][i]["hash"]);
    const auto file = a["datasets"][i]["file"].get<std::string>();
    EXPECT_EQ(read_file(dir / "a" / "datasets" / file), read_file(dir / "b" / "datasets" / file));
  }
}

TEST(Cli, FullPipelineAndGridCache) {
  const auto dir = testing_support::scratch_dir("cli-pipe");
  const auto out = dir / "run";
  ASSERT_EQ(cli("gen " + small(out), dir).status, 0);
  const auto first = cli("grid " + small(out), dir);
  ASSERT_EQ(first.status, 0) << first.err;
  EXPECT_NE(first.out.find("0 cache hits"), std::string::npos) << first.out;
  const auto second = cli("grid " + small(out), dir);
  ASSERT_EQ(second.status, 0) << second.err;
  EXPECT_NE(second.out.find(", 0 computed"), std::string::npos) << second.out;
  EXPECT_NE(second.out.find("(100.0%)"), std::string::npos) << second.out;

  ASSERT_EQ(cli("meta " + small(out), dir).status, 0);
  const auto train = cli("train " + small(out), dir);
  ASSERT_EQ(train.status, 0) << train.err;
  ASSERT_TRUE(fs::exists(out / "models" / "dtree-1.json"));

  const auto rec = cli("recommend --model " + (out / "models" / "dtree-1.json").string() + " --data " +
                           (out / "datasets" / "synth-11-0.csv").string(),
                       dir);
  ASSERT_EQ(rec.status, 0) << rec.err;
  // stdout is exactly one "method,multiplier" line; the detail goes to stderr.
  ASSERT_FALSE(rec.out.empty());
  EXPECT_EQ(rec.out.back(), '\n');
  const auto line = rec.out.substr(0, rec.out.size() - 1);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NO_THROW(resrec::parse_spec(line)) << line;
  const auto detail = nlohmann::json::parse(rec.err);
  EXPECT_EQ(detail.at("recommendation").get<std::string>(), line);
  EXPECT_EQ(detail.at("dataset").get<std::string>(), "synth-11-0");

  const auto assess = cli("assess " + small(out), dir);
  ASSERT_EQ(assess.status, 0) << assess.err;
  for (const char* f : {"ra.csv", "summary.json", "ecdf.svg", "choices.csv"}) {
    EXPECT_TRUE(fs::exists(out / "report" / f)) << f;
  }
  const auto before = read_file(out / "report" / "summary.json");
  ASSERT_EQ(cli("report " + small(out), dir).status, 0);
  EXPECT_EQ(read_file(out / "report" / "summary.json"), before);
}

TEST(Cli, ChangedDatasetIsRefused) {
  const auto dir = testing_support::scratch_dir("cli-hash");
  const auto out = dir / "run";
  ASSERT_EQ(cli("gen " + small(out), dir).status, 0);
  ASSERT_EQ(cli("grid " + small(out), dir).status, 0);
  const auto csv = out / "datasets" / "synth-11-2.csv";
  const auto original = resrec::ingest_csv(csv);
  auto features = original.features();
  std::vector<double> changed(features.begin(), features.end());
  changed[0] += 1.0;
  const auto labels = original.labels();
  resrec::write_csv(resrec::Dataset(original.id(), changed, original.dim(),
                                    std::vector<std::uint8_t>(labels.begin(), labels.end())),
                    csv);
  const auto meta = cli("meta " + small(out), dir);
  EXPECT_EQ(meta.status, 1);
  EXPECT_EQ(meta.err.rfind("error: E_HASH: ", 0), 0u) << meta.err;
}

TEST(Cli, ErrorLinesAndExitCodes) {
  const auto dir = testing_support::scratch_dir("cli-err");
  const auto missing = cli("grid --out " + (dir / "nothing").string(), dir);
  EXPECT_EQ(missing.status, 1);
  EXPECT_EQ(missing.err.rfind("error: E_MISSING: ", 0), 0u) << missing.err;

  const auto bad_arg = cli("gen --out " + (dir / "x").string() + " --alpha 2", dir);
  EXPECT_EQ(bad_arg.status, 1);
  EXPECT_EQ(bad_arg.err.rfind("error: E_ARG: ", 0), 0u) << bad_arg.err;

  const auto bad_flag = cli("gen --no-such-flag", dir);
  EXPECT_EQ(bad_flag.status, 2);
  EXPECT_EQ(bad_flag.err.rfind("error: ", 0), 0u) << bad_flag.err;

  const auto no_model = cli("recommend --model " + (dir / "m.json").string() + " --data x.csv", dir);
  EXPECT_EQ(no_model.status, 1);
  EXPECT_EQ(no_model.err.rfind("error: E_", 0), 0u) << no_model.err;
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = testing_support::scratch_dir("cli-config");
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "out = \"" << (dir / "cfg").string() << "\"\n"
        << "count = 3\nmin-size = 100\nmax-size = 120\nmin-dim = 3\nmax-dim = 3\nseed = 5\n";
  }
  ASSERT_EQ(cli("gen --config " + (dir / "run.ini").string(), dir).status, 0);
  auto manifest = nlohmann::json::parse(read_file(dir / "cfg" / "datasets" / "manifest.json"));
  EXPECT_EQ(manifest.at("datasets").size(), 3u);
  EXPECT_EQ(manifest.at("generator").at("seed").get<int>(), 5);

  const auto r = cli("gen --config " + (dir / "run.ini").string() + " --count 2 --seed 6", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  manifest = nlohmann::json::parse(read_file(dir / "cfg" / "datasets" / "manifest.json"));
  EXPECT_EQ(manifest.at("datasets").size(), 2u);
  EXPECT_EQ(manifest.at("generator").at("seed").get<int>(), 6);
  EXPECT_EQ(manifest["datasets"][0]["features"].get<int>(), 3);
}
