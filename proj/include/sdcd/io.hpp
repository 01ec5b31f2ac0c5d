#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdcd/dataset.hpp"
#include "sdcd/graph.hpp"
#include "sdcd/metrics.hpp"
#include "sdcd/model.hpp"
#include "sdcd/training.hpp"

namespace sdcd {

using json = nlohmann::ordered_json;

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return is;
}

inline json read_json_file(const std::string& path) {
  auto is = open_in(path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Dataset: data.csv (x0..x{d-1}, regime) + meta.json
// ---------------------------------------------------------------------------

inline void write_data_csv(std::ostream& os, const Dataset& data) {
  for (std::size_t j = 0; j < data.d(); ++j) os << 'x' << j << ',';
  os << "regime\n";
  for (std::size_t r = 0; r < data.n(); ++r) {
    for (std::size_t j = 0; j < data.d(); ++j) os << format_double(data.x(r, j)) << ',';
    os << data.regime[r] << '\n';
  }
}

inline json dataset_meta(const Dataset& data, const json& sim_params = json::object()) {
  json meta;
  meta["d"] = data.d();
  meta["n"] = data.n();
  meta["interventions"] = json::array();
  for (const auto& t : data.interventions) meta["interventions"].push_back(t);
  meta["standardized"] = data.standardized;
  meta["constant_columns"] = data.constant_columns;
  meta["sim_params"] = sim_params;
  return meta;
}

/// Reads the sample matrix and labels; the regime -> target map comes from meta.
inline Dataset read_dataset(std::istream& csv, const json& meta) {
  Dataset data;
  try {
    const auto d = meta.at("d").get<std::size_t>();
    data.interventions.clear();
    for (const auto& t : meta.at("interventions")) data.interventions.push_back(t.get<TargetSet>());
    data.standardized = meta.value("standardized", false);
    if (meta.contains("constant_columns")) data.constant_columns = meta["constant_columns"].get<std::vector<std::size_t>>();

    std::string line;
    if (!std::getline(csv, line)) throw ValidationError("data.csv: empty file");
    const auto header = split_csv_line(line);
    if (header.size() != d + 1 || header.back() != "regime")
      throw ValidationError("data.csv: header must list d feature columns followed by 'regime'");
    std::vector<double> values;
    std::vector<std::size_t> regimes;
    while (std::getline(csv, line)) {
      if (line.empty() || line == "\r") continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != d + 1) throw ValidationError("data.csv: wrong number of columns");
      for (std::size_t j = 0; j < d; ++j) values.push_back(parse_double(cells[j]));
      const double reg = parse_double(cells[d]);
      if (reg < 0 || reg != std::floor(reg)) throw ValidationError("data.csv: regime must be a nonnegative integer");
      regimes.push_back(static_cast<std::size_t>(reg));
    }
    data.x = Matrix(regimes.size(), d);
    std::copy(values.begin(), values.end(), data.x.data().begin());
    data.regime = std::move(regimes);
    if (meta.contains("n") && meta["n"].get<std::size_t>() != data.n())
      throw ValidationError("data.csv: row count differs from meta.json");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("meta.json: ") + e.what());
  }
  data.validate();
  return data;
}

inline Dataset load_dataset(const std::string& csv_path, const std::string& meta_path) {
  if (!std::filesystem::exists(meta_path)) throw ValidationError("missing meta file '" + meta_path + "'");
  const json meta = read_json_file(meta_path);
  auto is = open_in(csv_path);
  return read_dataset(is, meta);
}

inline void save_dataset(const std::string& dir, const Dataset& data, const DiGraph* truth,
                         const json& sim_params = json::object()) {
  std::filesystem::create_directories(dir);
  {
    auto os = open_out(dir + "/data.csv");
    write_data_csv(os, data);
  }
  {
    auto os = open_out(dir + "/meta.json");
    os << dataset_meta(data, sim_params).dump(2) << '\n';
  }
  if (truth) {
    auto os = open_out(dir + "/truth.csv");
    write_edge_list(os, *truth);
  }
}

// ---------------------------------------------------------------------------
// TrainConfig
// ---------------------------------------------------------------------------

inline json to_json(const TrainConfig& c) {
  return json{{"alpha1", c.alpha1},
              {"beta1", c.beta1},
              {"eta1", c.eta1},
              {"tau1", c.tau1},
              {"alpha2", c.alpha2},
              {"beta2", c.beta2},
              {"eta2", c.eta2},
              {"gamma_inc", c.gamma_inc},
              {"tau2", c.tau2},
              {"epochs1", c.epochs1},
              {"epochs2", c.epochs2},
              {"batch_size", c.batch_size},
              {"val_fraction", c.val_fraction},
              {"check_period", c.check_period},
              {"patience", c.patience},
              {"power_iters", c.power_iters},
              {"seed", c.seed},
              {"hidden", c.hidden},
              {"warm_start_stage2", c.warm_start_stage2},
              {"log_spectral_oracle", c.log_spectral_oracle}};
}

/// Overrides fields of `base` with the keys present in `j`; unknown keys are rejected.
inline TrainConfig config_from_json(const json& j, TrainConfig base = {}) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "alpha1") base.alpha1 = value.get<double>();
      else if (key == "beta1") base.beta1 = value.get<double>();
      else if (key == "eta1") base.eta1 = value.get<double>();
      else if (key == "tau1") base.tau1 = value.get<double>();
      else if (key == "alpha2") base.alpha2 = value.get<double>();
      else if (key == "beta2") base.beta2 = value.get<double>();
      else if (key == "eta2") base.eta2 = value.get<double>();
      else if (key == "gamma_inc") base.gamma_inc = value.get<double>();
      else if (key == "tau2") base.tau2 = value.get<double>();
      else if (key == "epochs1") base.epochs1 = value.get<std::size_t>();
      else if (key == "epochs2") base.epochs2 = value.get<std::size_t>();
      else if (key == "batch_size") base.batch_size = value.get<std::size_t>();
      else if (key == "val_fraction") base.val_fraction = value.get<double>();
      else if (key == "check_period") base.check_period = value.get<std::size_t>();
      else if (key == "patience") base.patience = value.get<std::size_t>();
      else if (key == "power_iters") base.power_iters = value.get<std::size_t>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "hidden") base.hidden = value.get<std::size_t>();
      else if (key == "warm_start_stage2") base.warm_start_stage2 = value.get<bool>();
      else if (key == "log_spectral_oracle") base.log_spectral_oracle = value.get<bool>();
      else throw ValidationError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return base;
}

// ---------------------------------------------------------------------------
// Training log (JSON lines)
// ---------------------------------------------------------------------------

inline json to_json(const TrainLogRecord& r) {
  json j{{"stage", r.stage},
         {"epoch", r.epoch},
         {"train_loss", r.train_loss},
         {"val_recon_loss", r.val_recon_loss ? json(*r.val_recon_loss) : json(nullptr)},
         {"gamma", r.gamma},
         {"h_value", r.h_value}};
  if (r.h_oracle) j["h_oracle"] = *r.h_oracle;
  j["is_dag_at_tau2"] = r.is_dag_at_tau2;
  j["frozen"] = r.frozen;
  return j;
}

inline TrainLogRecord log_record_from_json(const json& j) {
  TrainLogRecord r;
  try {
    r.stage = j.at("stage").get<int>();
    r.epoch = j.at("epoch").get<std::size_t>();
    r.train_loss = j.at("train_loss").is_null() ? std::nan("") : j.at("train_loss").get<double>();
    if (!j.at("val_recon_loss").is_null()) r.val_recon_loss = j["val_recon_loss"].get<double>();
    r.gamma = j.at("gamma").get<double>();
    r.h_value = j.at("h_value").get<double>();
    if (j.contains("h_oracle") && !j["h_oracle"].is_null()) r.h_oracle = j["h_oracle"].get<double>();
    r.is_dag_at_tau2 = j.at("is_dag_at_tau2").get<bool>();
    r.frozen = j.at("frozen").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("log record: ") + e.what());
  }
  return r;
}

inline std::vector<TrainLogRecord> read_log_jsonl(std::istream& is) {
  std::vector<TrainLogRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(log_record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("log line: ") + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline json to_json(const MetricReport& m) {
  return json{{"shd", m.shd},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"shd_cpdag", m.shd_cpdag},
              {"n_pred_edges", m.n_pred_edges},
              {"n_true_edges", m.n_true_edges}};
}

// ---------------------------------------------------------------------------
// Parameter checkpoint: one JSON header line, then one CSV line per tensor.
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& os, const ModelParams& p) {
  json header{{"format", "sdcd-params"}, {"version", kCheckpointVersion}, {"d", p.d}, {"h", p.h}, {"seed", p.seed}};
  json mask = json::array();
  for (std::size_t j = 0; j < p.d; ++j) {
    json row = json::array();
    for (std::size_t i = 0; i < p.d; ++i) row.push_back(p.mask[j * p.d + i] ? 1 : 0);
    mask.push_back(row);
  }
  header["mask"] = mask;
  os << header.dump() << '\n';
  const char* names[] = {"w_in", "b_in", "w_mu", "c_mu", "w_var", "c_var"};
  std::size_t k = 0;
  p.for_each_tensor([&](const std::vector<double>& t) {
    os << names[k++];
    for (double v : t) os << ',' << format_double(v);
    os << '\n';
  });
  os << "end\n";  // a truncated file lacks this line
}

inline ModelParams read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("checkpoint: empty");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }
  if (header.value("format", "") != "sdcd-params") throw ValidationError("checkpoint: unknown format");
  if (header.value("version", 0) != kCheckpointVersion) throw ValidationError("checkpoint: unsupported version");
  ModelParams p;
  const auto d = header.at("d").get<std::size_t>();
  const auto h = header.at("h").get<std::size_t>();
  static_cast<ParamBlock&>(p) = ParamBlock::zeros(d, h);
  p.seed = header.at("seed").get<std::uint64_t>();
  p.mask.assign(d * d, 0);
  const auto& mask = header.at("mask");
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) p.mask[j * d + i] = mask.at(j).at(i).get<int>() != 0;
  const char* names[] = {"w_in", "b_in", "w_mu", "c_mu", "w_var", "c_var"};
  std::size_t k = 0;
  p.for_each_tensor([&](std::vector<double>& t) {
    std::string row;
    if (!std::getline(is, row)) throw ValidationError("checkpoint: missing tensor line");
    const auto cells = split_csv_line(row);
    if (cells.empty() || cells[0] != names[k]) throw ValidationError("checkpoint: unexpected tensor name");
    if (cells.size() != t.size() + 1) throw ValidationError("checkpoint: tensor size mismatch");
    for (std::size_t q = 0; q < t.size(); ++q) t[q] = parse_double(cells[q + 1]);
    ++k;
  });
  std::string tail;
  if (!std::getline(is, tail) || tail != "end") throw ValidationError("checkpoint: truncated");
  return p;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// FNV-1a digest of a file's bytes, hex encoded. Lets a rerun be compared
/// against the recorded outputs without keeping copies around.
inline std::string file_digest(const std::string& path) {
  auto is = open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize k = 0; k < is.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // full argv after the program name
  std::string cwd;                // relative paths in args resolve against this
  json config = json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
  double wall_seconds = 0.0;
  std::string status = "running";  // running | ok | error
  std::string stop_reason;
  std::string error;
  json output_digests = json::object();
};

inline json to_json(const RunManifest& m) {
  return json{{"format", "sdcd-manifest"},
              {"version", 1},
              {"command", m.command},
              {"args", m.args},
              {"cwd", m.cwd},
              {"config", m.config},
              {"seeds", m.seeds},
              {"inputs", m.inputs},
              {"outputs", m.outputs},
              {"tool_version", m.tool_version},
              {"timings", {{"started_at", m.started_at}, {"finished_at", m.finished_at}, {"wall_seconds", m.wall_seconds}}},
              {"status", m.status},
              {"stop_reason", m.stop_reason},
              {"error", m.error},
              {"output_digests", m.output_digests}};
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    if (j.value("format", "") != "sdcd-manifest") throw ValidationError("manifest: unknown format");
    m.command = j.at("command").get<std::string>();
    m.args = j.at("args").get<std::vector<std::string>>();
    m.cwd = j.value("cwd", "");
    m.config = j.value("config", json::object());
    m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.tool_version = j.value("tool_version", "");
    if (j.contains("timings")) {
      m.started_at = j["timings"].value("started_at", "");
      m.finished_at = j["timings"].value("finished_at", "");
      m.wall_seconds = j["timings"].value("wall_seconds", 0.0);
    }
    m.status = j.value("status", "");
    m.stop_reason = j.value("stop_reason", "");
    m.error = j.value("error", "");
    m.output_digests = j.value("output_digests", json::object());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  return m;
}

inline void save_manifest(const std::string& path, const RunManifest& m) {
  auto os = open_out(path);
  os << to_json(m).dump(2) << '\n';
}

inline RunManifest load_manifest(const std::string& path) { return manifest_from_json(read_json_file(path)); }

}  // namespace sdcd
