// sdcd_cli: simulate, train, eval, bench-constraints, rerun.
//
// Exit codes: 0 ok, 2 usage, 3 validation, 4 non-finite abort, 5 I/O.
// SDCD_LOG_LEVEL selects stderr verbosity (error, info, debug; default info).

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "sdcd/sdcd.hpp"

namespace fs = std::filesystem;
using namespace sdcd;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kValidation = 3, kNonFinite = 4, kIo = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Logging

enum class Level { Error = 0, Info = 1, Debug = 2 };

Level log_level() {
  static const Level level = [] {
    const char* env = std::getenv("SDCD_LOG_LEVEL");
    const std::string v = env ? env : "info";
    if (v == "error") return Level::Error;
    if (v == "debug") return Level::Debug;
    if (v != "info") std::cerr << "warning: unknown SDCD_LOG_LEVEL '" << v << "', using info\n";
    return Level::Info;
  }();
  return level;
}

std::mutex log_mutex;

void log(Level lvl, const std::string& msg) {
  if (lvl > log_level()) return;
  std::lock_guard lock(log_mutex);
  std::cerr << (lvl == Level::Error ? "error: " : lvl == Level::Debug ? "debug: " : "") << msg << '\n';
}

// ---------------------------------------------------------------------------
// Manifest bookkeeping

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class ManifestScope {
 public:
  ManifestScope(std::string path, std::string command, std::vector<std::string> args) : path_(std::move(path)) {
    m_.command = std::move(command);
    m_.args = std::move(args);
    m_.cwd = fs::current_path().string();
    m_.tool_version = SDCD_VERSION;
    m_.started_at = utc_now();
    t0_ = std::chrono::steady_clock::now();
  }

  ManifestScope(const ManifestScope&) = delete;
  ManifestScope& operator=(const ManifestScope&) = delete;

  // A run that unwinds before finish() is recorded as failed.
  ~ManifestScope() {
    if (finished_ || !begun_) return;
    try {
      finish("error", "aborted; see stderr");
    } catch (...) {
    }
  }

  RunManifest& get() { return m_; }
  void begin() {
    begun_ = true;
    save();
  }

  void finish(const std::string& status, const std::string& error = {}) {
    finished_ = true;
    m_.status = status;
    m_.error = error;
    m_.finished_at = utc_now();
    m_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    m_.output_digests = json::object();
    for (const auto& out : m_.outputs)
      if (fs::exists(out)) m_.output_digests[out] = file_digest(out);
    save();
  }

 private:
  void save() {
    if (!path_.empty()) save_manifest(path_, m_);
  }

  std::string path_;
  RunManifest m_;
  std::chrono::steady_clock::time_point t0_;
  bool begun_ = false;
  bool finished_ = false;
};

// ---------------------------------------------------------------------------
// Flag parsing helpers

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw UsageError("empty list '" + s + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s[0] == '-') throw UsageError("not a nonnegative integer: '" + s + "'");
  return v;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw UsageError("not a number: '" + s + "'");
  return v;
}

// Comma list of integers; an item "a:b" or "a:b:step" expands to an inclusive range.
std::vector<std::uint64_t> parse_uint_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_uint(item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    const auto lo = parse_uint(item.substr(0, c1));
    const auto hi = parse_uint(item.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1));
    const auto step = c2 == std::string::npos ? 1 : parse_uint(item.substr(c2 + 1));
    if (step == 0 || hi < lo) throw UsageError("bad range '" + item + "'");
    for (auto v = lo; v <= hi; v += step) out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item));
  return out;
}

// Removes "--manifest X" / "--manifest=X" from an argument vector.
std::vector<std::string> strip_manifest_flag(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--manifest") {
      ++k;
      continue;
    }
    if (args[k].rfind("--manifest=", 0) == 0) continue;
    out.push_back(args[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::size_t d = 0;
  double s = 0.0;
  std::size_t n_obs = 10000;
  std::size_t n_per_target = 500;
  double frac = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool no_standardize = false;
  std::string manifest;
};

int cmd_simulate(const SimulateOpts& o, const std::vector<std::string>& args) {
  if (o.d < 2) throw UsageError("--d must be at least 2");
  if (!(o.s >= 0.0) || o.s > static_cast<double>(o.d - 1)) throw UsageError("--s must lie in [0, d-1]");
  if (!(o.frac >= 0.0 && o.frac <= 1.0)) throw UsageError("--frac-intervened must lie in [0, 1]");
  if (o.n_obs == 0) throw UsageError("--n-obs must be positive");

  fs::create_directories(o.out_dir);
  const std::string dir = o.out_dir;
  ManifestScope ms(o.manifest.empty() ? dir + "/manifest.json" : o.manifest, "simulate", args);
  ms.get().seeds = {o.seed};
  ms.get().outputs = {dir + "/data.csv", dir + "/meta.json", dir + "/truth.csv"};
  const SimulationSpec spec{o.d, o.s, o.n_obs, o.n_per_target, o.frac, o.seed, !o.no_standardize};
  const auto targets = intervened_prefix(o.d, o.frac, derive_seed(o.seed, 2));
  const json sim{{"d", o.d},
                 {"s", o.s},
                 {"graph_model", "erdos-renyi skeleton, p = s/(d-1), oriented by a random permutation"},
                 {"edge_probability", o.s / static_cast<double>(o.d - 1)},
                 {"expected_edges", o.s * static_cast<double>(o.d) / 2.0},
                 {"mechanism", "tanh MLP, 100 hidden units"},
                 {"noise_sigma", 0.5},
                 {"intervention_sigma", 0.1},
                 {"n_obs", o.n_obs},
                 {"n_per_target", o.n_per_target},
                 {"frac_intervened", o.frac},
                 {"intervened", targets},
                 {"seed", o.seed},
                 {"standardize", !o.no_standardize}};
  ms.get().config = sim;
  ms.begin();

  const auto out = simulate(spec);
  save_dataset(dir, out.data, &out.truth, sim);
  log(Level::Info, "simulate: " + std::to_string(out.data.n()) + " rows, " + std::to_string(out.truth.num_edges()) +
                       " true edges -> " + dir);
  ms.finish("ok");
  return kOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data, meta, out, config, log, manifest;
  bool oracle_report = false;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::size_t jobs = 1;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::string dir;
  std::string log_path;
  SdcdResult result;
  std::string error;
  int code = kOk;
};

std::vector<std::string> run_outputs(const SeedRun& r, bool oracle) {
  std::vector<std::string> out{r.dir + "/graph.csv", r.dir + "/adjacency.csv", r.dir + "/removed.csv",
                               r.dir + "/params.ckpt", r.log_path};
  if (oracle) out.push_back(r.dir + "/oracle_report.csv");
  return out;
}

void train_one(const Dataset& data, TrainConfig cfg, SeedRun& run, bool oracle) {
  cfg.seed = run.seed;
  fs::create_directories(run.dir);
  auto log_os = open_out(run.log_path);
  std::vector<oracle::OracleReport> reports;
  const auto sink = [&](const TrainLogRecord& rec) {
    log_os << to_json(rec).dump() << '\n';
    if (rec.h_oracle)
      reports.push_back(oracle::make_report("h_rho@stage" + std::to_string(rec.stage) + "_epoch" +
                                                std::to_string(rec.epoch),
                                            *rec.h_oracle, rec.h_value));
    if (log_level() >= Level::Debug && (rec.epoch % cfg.check_period == 0 || rec.epoch == 1)) {
      std::ostringstream msg;
      msg << "seed " << run.seed << " stage " << rec.stage << " epoch " << rec.epoch << " loss "
          << format_double(rec.train_loss) << " gamma " << format_double(rec.gamma) << " h "
          << format_double(rec.h_value) << (rec.frozen ? " frozen" : "");
      log(Level::Debug, msg.str());
    }
  };
  run.result = run_sdcd(data, cfg, sink);
  log_os.flush();
  if (!log_os) throw IoError("cannot write " + run.log_path);

  save_edge_list(run.dir + "/graph.csv", run.result.graph);
  save_matrix_csv(run.dir + "/adjacency.csv", run.result.adjacency);
  save_edge_list(run.dir + "/removed.csv", DiGraph(data.d(), run.result.removed));
  {
    auto os = open_out(run.dir + "/params.ckpt");
    write_checkpoint(os, run.result.stage2.params);
  }
  if (oracle) {
    auto os = open_out(run.dir + "/oracle_report.csv");
    oracle::write_report_csv(os, reports);
  }
  if (run.result.reason == StopReason::NonFinite) {
    run.code = kNonFinite;
    run.error = run.result.diagnostic;
  }
}

int cmd_train(const TrainOpts& o, const std::vector<std::string>& args) {
  TrainConfig cfg;
  if (!o.config.empty()) cfg = config_from_json(read_json_file(o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.oracle_report) cfg.log_spectral_oracle = true;
  try {
    detail::validate_config(cfg);
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  std::vector<std::uint64_t> seeds{cfg.seed};
  if (!o.seeds.empty()) seeds = parse_uint_list(o.seeds);
  const bool multi = seeds.size() > 1;
  if (multi && !o.log.empty()) throw UsageError("--log cannot be combined with several --seeds");
  const bool oracle = cfg.log_spectral_oracle;

  fs::create_directories(o.out);
  ManifestScope ms(o.manifest.empty() ? o.out + "/manifest.json" : o.manifest, "train", args);
  ms.get().config = to_json(cfg);
  ms.get().seeds = seeds;
  ms.get().inputs = {o.data, o.meta};
  if (!o.config.empty()) ms.get().inputs.push_back(o.config);

  std::vector<SeedRun> runs(seeds.size());
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    runs[k].seed = seeds[k];
    runs[k].dir = multi ? o.out + "/seed_" + std::to_string(seeds[k]) : o.out;
    runs[k].log_path = !o.log.empty() ? o.log : runs[k].dir + "/log.jsonl";
    for (auto& p : run_outputs(runs[k], oracle)) ms.get().outputs.push_back(p);
  }
  ms.begin();

  const Dataset data = load_dataset(o.data, o.meta);
  log(Level::Info, "train: n=" + std::to_string(data.n()) + " d=" + std::to_string(data.d()) + ", " +
                       std::to_string(seeds.size()) + " seed(s)");

  // Each seed owns its dataset view, config copy, and output directory.
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const auto worker = [&] {
    for (std::size_t k = next++; k < runs.size(); k = next++) {
      try {
        train_one(data, cfg, runs[k], oracle);
        log(Level::Info, "seed " + std::to_string(runs[k].seed) + ": " +
                             std::to_string(runs[k].result.graph.num_edges()) + " edges, " +
                             to_string(runs[k].result.reason));
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(o.jobs, runs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::string reasons;
  for (const auto& r : runs) reasons += std::string(reasons.empty() ? "" : ",") + to_string(r.result.reason);
  ms.get().stop_reason = reasons;
  for (const auto& r : runs) {
    if (r.code == kNonFinite) {
      log(Level::Error, "seed " + std::to_string(r.seed) + ": " + r.error);
      ms.finish("error", r.error);
      return kNonFinite;
    }
  }
  ms.finish("ok");
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string pred, truth, metrics = "shd,shd-cpdag,precision,recall,f1", out, manifest;
  bool as_json = false;
};

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& args) {
  static const std::vector<std::string> known{"shd", "shd-cpdag", "precision", "recall", "f1"};
  const auto wanted = split_list(o.metrics);
  for (const auto& w : wanted)
    if (std::find(known.begin(), known.end(), w) == known.end()) throw UsageError("unknown metric '" + w + "'");

  const std::string manifest = !o.manifest.empty() ? o.manifest : o.out.empty() ? "" : o.out + ".manifest.json";
  ManifestScope ms(manifest, "eval", args);
  ms.get().inputs = {o.pred, o.truth};
  if (!o.out.empty()) ms.get().outputs = {o.out};
  ms.begin();

  const auto truth = load_graph(o.truth);
  const auto pred = load_graph(o.pred);
  if (pred.num_nodes() != truth.num_nodes())
    throw ValidationError("eval: predicted graph has " + std::to_string(pred.num_nodes()) + " nodes, truth has " +
                          std::to_string(truth.num_nodes()));
  bool cpdag_ok = false;
  const auto m = evaluate(pred, truth, &cpdag_ok);

  std::ostringstream text;
  if (o.as_json) {
    json j = json::object();
    for (const auto& w : wanted) {
      if (w == "shd") j["shd"] = m.shd;
      if (w == "shd-cpdag") j["shd_cpdag"] = cpdag_ok ? json(m.shd_cpdag) : json(nullptr);
      if (w == "precision") j["precision"] = m.precision;
      if (w == "recall") j["recall"] = m.recall;
      if (w == "f1") j["f1"] = m.f1;
    }
    j["n_pred_edges"] = m.n_pred_edges;
    j["n_true_edges"] = m.n_true_edges;
    text << j.dump() << '\n';
  } else {
    std::string header, row;
    for (const auto& w : wanted) {
      header += (header.empty() ? "" : ",") + (w == "shd-cpdag" ? std::string("shd_cpdag") : w);
      std::string v;
      if (w == "shd") v = std::to_string(m.shd);
      if (w == "shd-cpdag") v = cpdag_ok ? std::to_string(m.shd_cpdag) : "NA";
      if (w == "precision") v = format_double(m.precision);
      if (w == "recall") v = format_double(m.recall);
      if (w == "f1") v = format_double(m.f1);
      row += (row.empty() ? "" : ",") + v;
    }
    text << header << '\n' << row << '\n';
  }
  std::cout << text.str();
  if (!o.out.empty()) {
    auto os = open_out(o.out);
    os << text.str();
  }
  ms.finish("ok");
  return kOk;
}

// ---------------------------------------------------------------------------
// bench-constraints

struct BenchOpts {
  std::string constraints = "exp,log,inv,binom,rho", family, d_list, scale_list, out, manifest;
  std::uint64_t seed = 0;
  std::size_t power_iters = kDefaultPowerIters;
  std::optional<std::size_t> cycle_length;
};

int cmd_bench(const BenchOpts& o, const std::vector<std::string>& args) {
  std::vector<ConstraintKind> kinds;
  for (const auto& name : split_list(o.constraints)) {
    const auto k = parse_constraint_kind(name);
    if (!k) throw UsageError("unknown constraint '" + name + "'");
    kinds.push_back(*k);
  }
  std::vector<std::size_t> ds;
  for (auto d : parse_uint_list(o.d_list)) {
    if (d < 1) throw UsageError("--d-list entries must be positive");
    ds.push_back(static_cast<std::size_t>(d));
  }
  const bool cycle = o.family == "cycle";
  const auto scales = parse_double_list(o.scale_list.empty() ? (cycle ? "0.5" : "1") : o.scale_list);
  if (o.cycle_length && !cycle) throw UsageError("--cycle-length applies to the cycle family only");

  const std::string manifest = !o.manifest.empty() ? o.manifest : o.out.empty() ? "" : o.out + ".manifest.json";
  ManifestScope ms(manifest, "bench-constraints", args);
  ms.get().seeds = {o.seed};
  if (!o.out.empty()) ms.get().outputs = {o.out};
  ms.begin();

  std::ostringstream text;
  write_probe_csv_header(text);
  for (double scale : scales) {
    const ProbeFamily fam = cycle ? ProbeFamily{CycleFamily{scale, o.cycle_length}} : ProbeFamily{UniformFamily{scale, o.seed}};
    for (auto kind : kinds) {
      write_probe_csv(text, stability_probe(kind, fam, ds, o.power_iters));
      log(Level::Debug, std::string("probed ") + std::string(to_string(kind)) + " at scale " + format_double(scale));
    }
  }
  std::cout << text.str();
  if (!o.out.empty()) {
    auto os = open_out(o.out);
    os << text.str();
  }
  ms.finish("ok");
  return kOk;
}

// ---------------------------------------------------------------------------
// rerun

int run_cli(std::vector<std::string> args);

int cmd_rerun(const std::string& manifest_path, const std::string& rerun_manifest) {
  const auto m = load_manifest(manifest_path);
  if (m.args.empty() || m.args[0] == "rerun") throw ValidationError("rerun: manifest has no replayable command");
  const std::string target = rerun_manifest.empty() ? manifest_path + ".rerun.json" : rerun_manifest;
  auto args = strip_manifest_flag(m.args);
  args.push_back("--manifest");
  args.push_back(fs::absolute(target).string());

  const auto here = fs::current_path();
  if (!m.cwd.empty()) fs::current_path(m.cwd);
  log(Level::Info, "rerun: " + m.command + " in " + fs::current_path().string());
  const int code = run_cli(args);
  fs::current_path(here);
  if (code != kOk) return code;

  const auto again = load_manifest(target);
  bool same = m.output_digests.size() == again.output_digests.size();
  for (const auto& [path, digest] : m.output_digests.items()) {
    const bool ok = again.output_digests.contains(path) && again.output_digests[path] == digest;
    std::cout << path << ',' << (ok ? "identical" : "differs") << '\n';
    same = same && ok;
  }
  if (!same) {
    log(Level::Error, "rerun: outputs differ from the recorded digests");
    return kValidation;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Two-stage differentiable causal discovery with a spectral acyclicity constraint"};
  app.set_version_flag("--version", std::string(SDCD_VERSION));
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* s = app.add_subcommand("simulate", "Sample a random nonlinear SCM dataset");
  s->add_option("--d", sim.d, "Number of variables")->required();
  s->add_option("--s", sim.s, "Expected edges per node")->required();
  s->add_option("--n-obs", sim.n_obs, "Observational rows")->capture_default_str();
  s->add_option("--n-per-target", sim.n_per_target, "Rows per intervened variable")->capture_default_str();
  s->add_option("--frac-intervened", sim.frac, "Fraction of variables intervened on")->capture_default_str();
  s->add_option("--seed", sim.seed)->capture_default_str();
  s->add_option("--out-dir", sim.out_dir)->required();
  s->add_flag("--no-standardize", sim.no_standardize, "Keep raw scales");
  s->add_option("--manifest", sim.manifest, "Manifest path (default <out-dir>/manifest.json)");

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Run both training stages and write the predicted graph");
  t->add_option("--data", tr.data)->required();
  t->add_option("--meta", tr.meta)->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--config", tr.config, "JSON object overriding training defaults");
  t->add_option("--log", tr.log, "JSONL training log (default <out>/log.jsonl)");
  t->add_option("--seed", tr.seed, "Overrides the config seed");
  t->add_option("--seeds", tr.seeds, "Comma list or a:b range; one subdirectory per seed");
  t->add_option("--jobs", tr.jobs, "Seeds trained concurrently")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_flag("--oracle-report", tr.oracle_report, "Log the exact spectral radius and write oracle_report.csv");
  t->add_option("--manifest", tr.manifest, "Manifest path (default <out>/manifest.json)");

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "Compare a predicted graph with the truth");
  e->add_option("--pred", ev.pred)->required();
  e->add_option("--true", ev.truth)->required();
  e->add_option("--metrics", ev.metrics, "Subset of shd,shd-cpdag,precision,recall,f1")->capture_default_str();
  e->add_flag("--json", ev.as_json);
  e->add_option("--out", ev.out, "Also write the result to this file");
  e->add_option("--manifest", ev.manifest);

  BenchOpts be;
  auto* b = app.add_subcommand("bench-constraints", "Tabulate constraint values on probe matrix families");
  b->add_option("--constraints", be.constraints, "Subset of exp,log,inv,binom,rho")->capture_default_str();
  b->add_option("--family", be.family)->required()->check(CLI::IsMember({"cycle", "uniform"}));
  b->add_option("--d-list", be.d_list, "Comma list; a:b or a:b:step expands to a range")->required();
  b->add_option("--scale-list", be.scale_list, "Cycle weights or uniform widths");
  b->add_option("--seed", be.seed)->capture_default_str();
  b->add_option("--power-iters", be.power_iters)->capture_default_str()->check(CLI::PositiveNumber);
  b->add_option("--cycle-length", be.cycle_length)->check(CLI::PositiveNumber);
  b->add_option("--out", be.out, "Also write the table to this file");
  b->add_option("--manifest", be.manifest);

  std::string rerun_path, rerun_manifest;
  auto* r = app.add_subcommand("rerun", "Replay a manifest and compare output digests");
  r->add_option("--manifest", rerun_path)->required();
  r->add_option("--rerun-manifest", rerun_manifest, "Where the replay writes its manifest");

  const std::vector<std::string> recorded = args;
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  if (s->parsed()) return cmd_simulate(sim, recorded);
  if (t->parsed()) return cmd_train(tr, recorded);
  if (e->parsed()) return cmd_eval(ev, recorded);
  if (b->parsed()) return cmd_bench(be, recorded);
  return cmd_rerun(rerun_path, rerun_manifest);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_cli(args);
  } catch (const UsageError& e) {
    log(Level::Error, std::string("usage: ") + e.what());
    return kUsage;
  } catch (const InvalidArgument& e) {
    log(Level::Error, std::string("usage: ") + e.what());
    return kUsage;
  } catch (const ValidationError& e) {
    log(Level::Error, e.what());
    return kValidation;
  } catch (const DimensionError& e) {
    log(Level::Error, e.what());
    return kValidation;
  } catch (const NonFiniteError& e) {
    log(Level::Error, e.what());
    return kNonFinite;
  } catch (const IoError& e) {
    log(Level::Error, e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    log(Level::Error, e.what());
    return kIo;
  } catch (const std::exception& e) {
    log(Level::Error, std::string("internal: ") + e.what());
    return kInternal;
  }
}
