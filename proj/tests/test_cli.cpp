#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdcd/io.hpp"
#include "sdcd/metrics.hpp"

namespace fs = std::filesystem;
using namespace sdcd;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(SDCD_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sdcd_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

}  // namespace

TEST(Simulate, ObservationalOnly) {
  const auto dir = scratch("obs");
  ASSERT_EQ(cli("simulate --d 10 --s 4 --frac-intervened 0 --seed 1 --out-dir " + dir.string()).code, 0);
  const auto data = load_dataset((dir / "data.csv").string(), (dir / "meta.json").string());
  EXPECT_EQ(data.n(), 10000u);
  EXPECT_EQ(data.d(), 10u);
  for (auto r : data.regime) ASSERT_EQ(r, 0u);
  EXPECT_TRUE(is_acyclic(load_graph((dir / "truth.csv").string())));
  EXPECT_EQ(load_manifest((dir / "manifest.json").string()).status, "ok");
}

TEST(Simulate, FullyIntervened) {
  const auto dir = scratch("full");
  ASSERT_EQ(cli("simulate --d 10 --s 4 --frac-intervened 1 --out-dir " + dir.string()).code, 0);
  const auto data = load_dataset((dir / "data.csv").string(), (dir / "meta.json").string());
  EXPECT_EQ(data.n(), 15000u);
  EXPECT_EQ(data.interventions.size(), 11u);
}

TEST(Simulate, FractionalCoverageUsesCeiling) {
  const auto dir = scratch("frac");
  ASSERT_EQ(cli("simulate --d 10 --s 2 --n-obs 100 --n-per-target 10 --frac-intervened 0.25 --out-dir " +
                dir.string())
                .code,
            0);
  const auto meta = read_json_file((dir / "meta.json").string());
  EXPECT_EQ(meta["sim_params"]["intervened"].size(), 3u);
  EXPECT_EQ(meta["n"], 130);
}

TEST(Simulate, SameFlagsSameBytes) {
  const auto a = scratch("same_a"), b = scratch("same_b");
  const std::string flags = "simulate --d 6 --s 2 --n-obs 500 --frac-intervened 0.5 --seed 4 --out-dir ";
  ASSERT_EQ(cli(flags + a.string()).code, 0);
  ASSERT_EQ(cli(flags + b.string()).code, 0);
  for (const char* f : {"data.csv", "meta.json", "truth.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Simulate, UsageErrors) {
  const auto dir = scratch("usage");
  EXPECT_EQ(cli("simulate --d 10 --s 4 --frac-intervened 1.5 --out-dir " + dir.string()).code, 2);
  EXPECT_EQ(cli("simulate --d 10 --out-dir " + dir.string()).code, 2);
  EXPECT_EQ(cli("simulate --d 10 --s 40 --out-dir " + dir.string()).code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("").code, 2);
}

TEST(Train, SmokeRunWritesAcyclicGraphLogAndManifest) {
  const auto dir = scratch("train");
  ASSERT_EQ(cli("simulate --d 5 --s 2 --n-obs 400 --out-dir " + dir.string()).code, 0);
  write_text(dir / "cfg.json", R"({"epochs1": 1, "epochs2": 1})");
  const auto out = dir / "run";
  ASSERT_EQ(cli("train --data " + (dir / "data.csv").string() + " --meta " + (dir / "meta.json").string() +
                " --config " + (dir / "cfg.json").string() + " --out " + out.string())
                .code,
            0);
  EXPECT_TRUE(is_acyclic(load_graph((out / "graph.csv").string(), 5)));
  std::ifstream log(out / "log.jsonl");
  const auto records = read_log_jsonl(log);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].stage, 1);
  EXPECT_EQ(records[1].stage, 2);
  const auto m = load_manifest((out / "manifest.json").string());
  EXPECT_EQ(m.status, "ok");
  EXPECT_EQ(m.config["epochs1"], 1);
  EXPECT_FALSE(m.output_digests.empty());
}

TEST(Train, SeedsFanOutIntoSubdirectories) {
  const auto dir = scratch("seeds");
  ASSERT_EQ(cli("simulate --d 4 --s 1 --n-obs 300 --out-dir " + dir.string()).code, 0);
  write_text(dir / "cfg.json", R"({"epochs1": 2, "epochs2": 2})");
  const std::string base = "train --data " + (dir / "data.csv").string() + " --meta " +
                           (dir / "meta.json").string() + " --config " + (dir / "cfg.json").string();
  ASSERT_EQ(cli(base + " --seeds 0:2 --jobs 2 --out " + (dir / "par").string()).code, 0);
  ASSERT_EQ(cli(base + " --seeds 0,1,2 --jobs 1 --out " + (dir / "seq").string()).code, 0);
  for (int s = 0; s < 3; ++s) {
    const auto sub = "seed_" + std::to_string(s);
    EXPECT_EQ(slurp(dir / "par" / sub / "adjacency.csv"), slurp(dir / "seq" / sub / "adjacency.csv"));
  }
}

TEST(Train, MissingMetaIsValidationExit) {
  const auto dir = scratch("nometa");
  ASSERT_EQ(cli("simulate --d 4 --s 1 --n-obs 100 --out-dir " + dir.string()).code, 0);
  fs::remove(dir / "meta.json");
  EXPECT_EQ(cli("train --data " + (dir / "data.csv").string() + " --meta " + (dir / "meta.json").string() +
                " --out " + (dir / "run").string())
                .code,
            3);
}

TEST(Train, TypedExitCodes) {
  const auto dir = scratch("codes");
  ASSERT_EQ(cli("simulate --d 4 --s 1 --n-obs 100 --out-dir " + dir.string()).code, 0);
  const std::string meta = " --meta " + (dir / "meta.json").string() + " --out " + (dir / "run").string();
  EXPECT_EQ(cli("train --data " + (dir / "absent.csv").string() + meta).code, 5);
  write_text(dir / "bad.json", R"({"epochz": 1})");
  EXPECT_EQ(cli("train --data " + (dir / "data.csv").string() + meta + " --config " + (dir / "bad.json").string()).code,
            3);
  write_text(dir / "zero.json", R"({"batch_size": 0})");
  EXPECT_EQ(
      cli("train --data " + (dir / "data.csv").string() + meta + " --config " + (dir / "zero.json").string()).code, 3);
}

TEST(Train, NonFiniteAbortExit) {
  const auto dir = scratch("nonfinite");
  Dataset data;
  data.x = Matrix{{1e200, 0.0}, {-1e200, 1.0}, {3e200, 2.0}, {0.0, -1.0}, {1.0, 1.0}};
  data.regime.assign(5, 0);
  save_dataset(dir.string(), data, nullptr);
  write_text(dir / "cfg.json", R"({"epochs1": 2, "epochs2": 2})");
  const auto out = dir / "run";
  EXPECT_EQ(cli("train --data " + (dir / "data.csv").string() + " --meta " + (dir / "meta.json").string() +
                " --config " + (dir / "cfg.json").string() + " --out " + out.string())
                .code,
            4);
  const auto m = load_manifest((out / "manifest.json").string());
  EXPECT_EQ(m.status, "error");
  EXPECT_EQ(m.stop_reason, "non_finite");
}

TEST(Eval, Examples) {
  const auto dir = scratch("eval");
  save_edge_list((dir / "truth.csv").string(), DiGraph(4, {{0, 1}, {1, 2}, {3, 2}}));
  save_edge_list((dir / "empty.csv").string(), DiGraph(4));
  save_edge_list((dir / "rev.csv").string(), DiGraph(4, {{1, 0}, {1, 2}, {3, 2}}));
  save_edge_list((dir / "small.csv").string(), DiGraph(3));
  const std::string t = " --true " + (dir / "truth.csv").string();

  auto same = cli("eval --pred " + (dir / "truth.csv").string() + t);
  ASSERT_EQ(same.code, 0);
  EXPECT_EQ(same.out, "shd,shd_cpdag,precision,recall,f1\n0,0,1,1,1\n");
  EXPECT_EQ(cli("eval --metrics shd --pred " + (dir / "empty.csv").string() + t).out, "shd\n3\n");
  EXPECT_EQ(cli("eval --metrics shd,f1 --pred " + (dir / "rev.csv").string() + t).out, "shd,f1\n1,0.66666666666666663\n");

  const auto js = cli("eval --json --pred " + (dir / "rev.csv").string() + t);
  ASSERT_EQ(js.code, 0);
  const auto j = json::parse(js.out);
  EXPECT_EQ(j["shd"], 1);
  EXPECT_EQ(j["n_true_edges"], 3);

  EXPECT_EQ(cli("eval --pred " + (dir / "small.csv").string() + t).code, 3);
  EXPECT_EQ(cli("eval --metrics sid --pred " + (dir / "rev.csv").string() + t).code, 2);
}

TEST(Eval, CyclicPredictionHasNoCpdagDistance) {
  const auto dir = scratch("eval_cyc");
  save_edge_list((dir / "truth.csv").string(), DiGraph(3, {{0, 1}}));
  save_edge_list((dir / "cyc.csv").string(), DiGraph(3, {{0, 1}, {1, 2}, {2, 0}}));
  const auto r = cli("eval --metrics shd,shd-cpdag --pred " + (dir / "cyc.csv").string() + " --true " +
                     (dir / "truth.csv").string());
  EXPECT_EQ(r.out, "shd,shd_cpdag\n2,NA\n");
}

TEST(Bench, CycleFamily) {
  const auto r = cli("bench-constraints --constraints exp,rho --family cycle --scale-list 0.5 --d-list 10:200:10");
  ASSERT_EQ(r.code, 0);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "d,constraint,family,scale,value,status");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    ASSERT_EQ(f.size(), 6u);
    const auto d = std::stoul(f[0]);
    if (f[1] == "rho") {
      EXPECT_EQ(f[4], "0.5") << line;
    } else if (d >= 30) {
      EXPECT_EQ(f[5], "underflow-to-zero") << line;
    }
  }
  EXPECT_EQ(rows, 40u);
}

TEST(Bench, UniformFamily) {
  const auto r = cli("bench-constraints --constraints exp,rho,log --family uniform --scale-list 1 --d-list 100");
  ASSERT_EQ(r.code, 0);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    if (f[1] == "exp") { EXPECT_TRUE(f[5] == "overflow-to-inf" || std::stod(f[4]) > 1e15) << line; }
    if (f[1] == "rho") {
      EXPECT_GE(std::stod(f[4]), 30.0);
      EXPECT_LE(std::stod(f[4]), 70.0);
    }
    if (f[1] == "log") { EXPECT_EQ(f[5], "domain-error"); }
  }
}

TEST(Bench, LogDomainErrorAtTwenty) {
  const auto r = cli("bench-constraints --constraints log --family uniform --scale-list 1 --d-list 20");
  EXPECT_EQ(r.out, "d,constraint,family,scale,value,status\n20,log,uniform,1,nan,domain-error\n");
}

TEST(Bench, UnknownConstraintIsUsageError) {
  EXPECT_EQ(cli("bench-constraints --constraints sqrt --family cycle --d-list 5").code, 2);
  EXPECT_EQ(cli("bench-constraints --family triangle --d-list 5").code, 2);
  EXPECT_EQ(cli("bench-constraints --family cycle --d-list 5:x").code, 2);
}

TEST(Rerun, ReproducesSimulateAndEval) {
  const auto dir = scratch("rerun");
  ASSERT_EQ(cli("simulate --d 5 --s 2 --n-obs 200 --seed 8 --out-dir " + dir.string()).code, 0);
  const auto before = slurp(dir / "data.csv");
  const auto r = cli("rerun --manifest " + (dir / "manifest.json").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("data.csv,identical"), std::string::npos);
  EXPECT_EQ(slurp(dir / "data.csv"), before);

  ASSERT_EQ(cli("eval --pred " + (dir / "truth.csv").string() + " --true " + (dir / "truth.csv").string() +
                " --out " + (dir / "eval.csv").string())
                .code,
            0);
  EXPECT_EQ(cli("rerun --manifest " + (dir / "eval.csv.manifest.json").string()).code, 0);
}

TEST(Rerun, DetectsChangedOutputs) {
  const auto dir = scratch("rerun_diff");
  ASSERT_EQ(cli("simulate --d 4 --s 1 --n-obs 50 --out-dir " + dir.string()).code, 0);
  auto m = load_manifest((dir / "manifest.json").string());
  m.output_digests[(dir / "data.csv").string()] = "0000000000000000";
  save_manifest((dir / "manifest.json").string(), m);
  EXPECT_EQ(cli("rerun --manifest " + (dir / "manifest.json").string()).code, 3);
}
