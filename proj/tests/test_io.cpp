#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "sdcd/io.hpp"

using namespace sdcd;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sdcd_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(DatasetFiles, RoundTripBitExactly) {
  const auto g = random_dag(5, 2.0, 1);
  const auto data = standardize(sample(random_mechanisms(g, 2), 300, 40, {1, 3}, 3));
  const auto dir = scratch_dir("dataset").string();
  save_dataset(dir, data, &g, json{{"s", 2.0}});
  const auto back = load_dataset(dir + "/data.csv", dir + "/meta.json");
  EXPECT_EQ(back.x, data.x);
  EXPECT_EQ(back.regime, data.regime);
  EXPECT_EQ(back.interventions, data.interventions);
  EXPECT_TRUE(back.standardized);
  EXPECT_EQ(load_graph(dir + "/truth.csv"), g);
  const auto meta = read_json_file(dir + "/meta.json");
  EXPECT_EQ(meta["d"], 5);
  EXPECT_EQ(meta["n"], 380);
  EXPECT_EQ(meta["sim_params"]["s"], 2.0);
}

TEST(DatasetFiles, HeaderFormat) {
  Dataset data;
  data.x = Matrix{{0.5, -1.0}};
  data.regime = {0};
  std::ostringstream os;
  write_data_csv(os, data);
  EXPECT_EQ(os.str(), "x0,x1,regime\n0.5,-1,0\n");
}

TEST(DatasetFiles, MissingMetaIsValidationError) {
  const auto dir = scratch_dir("nometa").string();
  EXPECT_THROW(load_dataset(dir + "/data.csv", dir + "/meta.json"), ValidationError);
}

TEST(DatasetFiles, MalformedContent) {
  const json meta{{"d", 2}, {"n", 1}, {"interventions", json::array({json::array()})}};
  std::stringstream wrong_header("a,b\n1,2\n");
  EXPECT_THROW(read_dataset(wrong_header, meta), ValidationError);
  std::stringstream bad_regime("x0,x1,regime\n1,2,3\n");
  EXPECT_THROW(read_dataset(bad_regime, meta), ValidationError);
  std::stringstream bad_number("x0,x1,regime\n1,zz,0\n");
  EXPECT_THROW(read_dataset(bad_number, meta), ValidationError);
  std::stringstream row_count("x0,x1,regime\n1,2,0\n3,4,0\n");
  EXPECT_THROW(read_dataset(row_count, meta), ValidationError);
}

TEST(Config, DefaultsRoundTrip) {
  const TrainConfig c;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(to_json(c)["alpha1"], 1e-2);
  EXPECT_EQ(to_json(c)["gamma_inc"], 0.005);
  EXPECT_EQ(to_json(c)["epochs2"], 2000);
}

TEST(Config, OverridesAndUnknownKeys) {
  const auto c = config_from_json(json{{"epochs1", 1}, {"epochs2", 1}, {"seed", 9}});
  EXPECT_EQ(c.epochs1, 1u);
  EXPECT_EQ(c.epochs2, 1u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.alpha2, 5e-4);
  EXPECT_THROW(config_from_json(json{{"epoch1", 1}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"epochs1", "many"}}), ValidationError);
  EXPECT_THROW(config_from_json(json::array()), ValidationError);
}

TEST(LogRecord, JsonRoundTrip) {
  TrainLogRecord r;
  r.stage = 2;
  r.epoch = 40;
  r.train_loss = 13.25;
  r.val_recon_loss = 12.5;
  r.gamma = 0.195;
  r.h_value = 0.0625;
  r.h_oracle = 0.0626;
  r.is_dag_at_tau2 = true;
  r.frozen = true;
  std::stringstream ss;
  ss << to_json(r).dump() << '\n';
  TrainLogRecord plain;
  ss << to_json(plain).dump() << '\n';
  const auto back = read_log_jsonl(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].epoch, 40u);
  EXPECT_EQ(back[0].val_recon_loss, 12.5);
  EXPECT_EQ(back[0].h_oracle, 0.0626);
  EXPECT_TRUE(back[0].frozen);
  EXPECT_FALSE(back[1].val_recon_loss.has_value());
  EXPECT_FALSE(back[1].h_oracle.has_value());
  EXPECT_TRUE(to_json(plain)["val_recon_loss"].is_null());
}

TEST(Metrics, FlatJson) {
  MetricReport m;
  m.shd = 3;
  m.f1 = 0.5;
  const auto j = to_json(m);
  EXPECT_EQ(j["shd"], 3);
  EXPECT_EQ(j["f1"], 0.5);
  EXPECT_EQ(j.size(), 7u);
}

TEST(Checkpoint, RoundTripBitExactly) {
  auto mask = self_loop_mask(4);
  mask[2 * 4 + 1] = 0;
  const auto p = init_params(4, 3, mask, 21);
  std::stringstream ss;
  write_checkpoint(ss, p);
  EXPECT_EQ(read_checkpoint(ss), p);
}

TEST(Checkpoint, RejectsWrongFormat) {
  std::stringstream ss("{\"format\":\"other\"}\n");
  EXPECT_THROW(read_checkpoint(ss), ValidationError);
  const auto p = init_params(2, 2, self_loop_mask(2), 1);
  std::stringstream full;
  write_checkpoint(full, p);
  std::string text = full.str();
  text.resize(text.size() - 10);
  std::stringstream cut(text);
  EXPECT_THROW(read_checkpoint(cut), ValidationError);
}

TEST(Manifest, RoundTripAndDigest) {
  const auto dir = scratch_dir("manifest");
  {
    std::ofstream os(dir / "out.txt");
    os << "hello\n";
  }
  RunManifest m;
  m.command = "eval";
  m.args = {"eval", "--pred", "a.csv"};
  m.seeds = {1, 2};
  m.outputs = {(dir / "out.txt").string()};
  m.status = "ok";
  m.output_digests[(dir / "out.txt").string()] = file_digest((dir / "out.txt").string());
  save_manifest((dir / "m.json").string(), m);
  const auto back = load_manifest((dir / "m.json").string());
  EXPECT_EQ(back.args, m.args);
  EXPECT_EQ(back.seeds, m.seeds);
  EXPECT_EQ(back.status, "ok");
  EXPECT_EQ(back.output_digests, m.output_digests);
  // FNV-1a of "hello\n".
  EXPECT_EQ(file_digest((dir / "out.txt").string()), "a9bc80cca21f28b3");
}
