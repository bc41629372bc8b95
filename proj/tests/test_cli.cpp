#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fcxl/eval.hpp"
#include "fcxl/interaction.hpp"
#include "fcxl/mask_ops.hpp"
#include "support.hpp"

using namespace fcxl;
using namespace fcxl::testing;
using json = nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(FCXL_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  RunResult r;
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::filesystem::path fixture_root(const std::string& name, int n) {
  std::vector<FixtureSample> samples;
  for (int i = 0; i < n; ++i) samples.push_back(two_tone_fixture(i));
  const auto root = temp_dir(name);
  write_dataset(root / "ds", samples);
  return root;
}

}  // namespace

TEST(Cli, EvalClicksWritesReport) {
  const auto root = fixture_root("cli_eval", 3);
  const auto out = root / "report.json";
  const auto r = run_cli("eval --dataset " + (root / "ds").string() + " --backend oracle:delay:3 --targets 85,90 --out " +
                         out.string() + " --log-level warn");
  ASSERT_EQ(r.code, 0) << r.output;
  const EvalReport report = read_report(out);
  EXPECT_EQ(report.aggregates.at("NoC90"), 3.0);
  EXPECT_EQ(report.aggregates.at("NoF85"), 0.0);
  EXPECT_EQ(report.samples.size(), 3u);

  const auto csv = root / "report.csv";
  ASSERT_EQ(run_cli("eval --dataset " + (root / "ds").string() + " --backend oracle:never --cap 4 --targets 90 --format csv --out " +
                    csv.string() + " --log-level off")
                .code,
            0);
  const Bytes text = read_file(csv);
  EXPECT_EQ(std::string(text.begin(), text.end()).substr(0, 11), "NoC90,NoF90");
}

TEST(Cli, EvalBoxesAndCoarse) {
  const auto root = fixture_root("cli_single", 2);
  const auto boxes = root / "boxes.json";
  ASSERT_EQ(run_cli("eval --mode boxes --dataset " + (root / "ds").string() + " --backend oracle:perfect --out " +
                    boxes.string() + " --log-level off")
                .code,
            0);
  EXPECT_EQ(read_json(boxes).at("result").at("output_mIoU"), 1.0);
  const auto coarse = root / "coarse.json";
  ASSERT_EQ(run_cli("eval --mode coarse --levels 1,2 --dataset " + (root / "ds").string() +
                    " --backend oracle:identity --out " + coarse.string() + " --log-level off")
                .code,
            0);
  EXPECT_EQ(read_json(coarse).at("levels").size(), 2u);
}

TEST(Cli, SimulateDefectsThenEvalFromInitialMasks) {
  const auto root = fixture_root("cli_defects", 3);
  const auto out = root / "defective";
  const auto r = run_cli("--seed 4 simulate-defects --dataset " + (root / "ds").string() + " --out " + out.string() +
                         " --log-level off");
  ASSERT_EQ(r.code, 0) << r.output;
  const Dataset ds = load_dataset(out);
  ASSERT_EQ(ds.samples.size(), 3u);
  for (const auto& s : ds.samples) {
    ASSERT_TRUE(s.initial_mask);
    const double v = iou(*s.initial_mask, s.gt);
    EXPECT_GE(v, 0.75);
    EXPECT_LE(v, 0.85);
  }
  EXPECT_EQ(read_json(out / "manifest.json").at("kind"), "defective-masks");
  const auto report = root / "r.json";
  ASSERT_EQ(run_cli("eval --start initial --dataset " + out.string() + " --backend oracle:perfect --out " +
                    report.string() + " --log-level off")
                .code,
            0);
  // Progressive merge repairs one error component per click, so the count
  // is the number of defect components the oracle has to visit.
  const EvalReport rep = read_report(report);
  EXPECT_GE(rep.aggregates.at("NoC90"), 1.0);
  EXPECT_EQ(rep.aggregates.at("NoF90"), 0.0);
}

TEST(Cli, PerturbAndScribbles) {
  const auto root = fixture_root("cli_perturb", 3);
  const auto out = root / "coarse";
  ASSERT_EQ(run_cli("perturb --level 2 --dataset " + (root / "ds").string() + " --out " + out.string() +
                    " --log-level off")
                .code,
            0);
  for (const auto& s : load_dataset(out).samples) {
    const double v = iou(*s.initial_mask, s.gt);
    EXPECT_GE(v, 0.75);
    EXPECT_LE(v, 0.80);
  }
  const auto jsonl = root / "scribbles.jsonl";
  ASSERT_EQ(run_cli("gen-scribbles --style eval --dataset " + (root / "ds").string() + " --out " + jsonl.string() +
                    " --log-level off")
                .code,
            0);
  std::ifstream in(jsonl);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_TRUE(j.contains("sample_id"));
    EXPECT_NO_THROW(interaction_from_json(j.at("payload")));
    ++lines;
  }
  EXPECT_EQ(lines, 3);
}

TEST(Cli, BuildSubsetSamplesFramesPerVideo) {
  const auto root = temp_dir("cli_subset");
  std::vector<FixtureSample> samples;
  for (int v = 0; v < 2; ++v) {
    for (int f = 0; f < 15; ++f) {
      FixtureSample s = two_tone_fixture(f % 10);
      char id[32];
      std::snprintf(id, sizeof(id), "vid%d/f%02d", v, f);
      s.id = id;
      if (v == 1 && f == 0) s.gt = rect_mask(s.gt.size(), 0, 0, 5, 5);  // below --min-pixels
      samples.push_back(s);
    }
  }
  write_dataset(root / "ds", samples);
  const auto r = run_cli("build-subset --per-video 5 --dataset " + (root / "ds").string() + " --out " +
                         (root / "sub").string() + " --log-level off");
  ASSERT_EQ(r.code, 0) << r.output;
  const Dataset sub = load_dataset(root / "sub");
  int v0 = 0;
  int v1 = 0;
  for (const auto& s : sub.samples) {
    EXPECT_GE(s.gt.count(), 300u);
    (s.id.rfind("vid0/", 0) == 0 ? v0 : v1)++;
  }
  EXPECT_EQ(v0, 5);
  EXPECT_EQ(v1, 4);
}

TEST(Cli, ExitCodes) {
  const auto root = fixture_root("cli_codes", 1);
  const std::string ds = (root / "ds").string();
  const std::string out = (root / "o.json").string();
  EXPECT_EQ(run_cli("eval --dataset " + ds + " --bogus").code, 2);
  EXPECT_EQ(run_cli("eval --dataset " + ds + " --targets 150 --out " + out).code, 2);
  EXPECT_EQ(run_cli("eval --dataset " + ds + " --backend neural --out " + out).code, 2);
  EXPECT_EQ(run_cli("eval --dataset " + (root / "missing").string() + " --out " + out).code, 3);
  EXPECT_EQ(run_cli("eval --dataset " + ds + " --backend remote:http://127.0.0.1:1/m --out " + out).code, 4);
  EXPECT_EQ(run_cli("--help").code, 0);

  // Every ground truth is too small for defect simulation.
  const auto small = temp_dir("cli_small");
  FixtureSample s = two_tone_fixture(0);
  s.gt = rect_mask(s.gt.size(), 0, 0, 10, 10);
  write_dataset(small / "ds", {s});
  EXPECT_EQ(run_cli("simulate-defects --dataset " + (small / "ds").string() + " --out " + (small / "o").string()).code,
            6);
}

TEST(Cli, ServeReportsBusyPort) {
  httplib::Server holder;
  const int port = holder.bind_to_any_port("127.0.0.1");
  const auto r = run_cli("serve --bind 127.0.0.1:" + std::to_string(port));
  EXPECT_EQ(r.code, 5) << r.output;
}

TEST(Cli, JsonLogsAreStructured) {
  const auto root = fixture_root("cli_logs", 1);
  const auto r = run_cli("--log-level json eval --dataset " + (root / "ds").string() +
                         " --backend oracle:perfect --out " + (root / "o.json").string());
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.output);
  std::string line;
  int parsed = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    EXPECT_TRUE(j.contains("level"));
    EXPECT_TRUE(j.contains("msg"));
    ++parsed;
  }
  EXPECT_GT(parsed, 0);
}
