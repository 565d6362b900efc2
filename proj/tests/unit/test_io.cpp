#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nesua/config.hpp"
#include "nesua/errors.hpp"
#include "nesua/io.hpp"

namespace nesua {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("nesua_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Sample sample(std::uint64_t seed, int k = 5, int n = 3) {
  ScenarioConfig cfg;
  cfg.n_ues = k;
  cfg.n_cells = n;
  auto s = generate_scenario(cfg, seed);
  auto g = build_graph(s, 0.0);
  return {std::move(s), std::move(g)};
}

std::vector<double> flat(GatModel& m) {
  std::vector<double> out;
  for (auto* t : m.parameters()) out.insert(out.end(), t->values().begin(), t->values().end());
  return out;
}

TEST(DatasetRecord, RoundTripsExactly) {
  const auto a = sample(12);
  const auto line = dataset_record(a, "abc");
  EXPECT_EQ(line.find('\n'), std::string::npos);
  for (const char* key : {"\"seed\"", "\"bs_xy\"", "\"ue_xy\"", "\"sinr_db\"", "\"sinr_prb_db\"", "\"rsrp_dbm\"",
                          "\"prb\"", "\"adj\"", "\"feat\""}) {
    EXPECT_NE(line.find(key), std::string::npos) << key;
  }
  const auto b = parse_dataset_record(line);
  EXPECT_EQ(b.scenario.seed, a.scenario.seed);
  EXPECT_EQ(b.scenario.bs_positions, a.scenario.bs_positions);
  EXPECT_EQ(b.scenario.ue_positions, a.scenario.ue_positions);
  EXPECT_EQ(b.scenario.distance_m, a.scenario.distance_m);
  EXPECT_EQ(b.scenario.sinr_db, a.scenario.sinr_db);
  EXPECT_EQ(b.scenario.sinr_prb_db, a.scenario.sinr_prb_db);
  EXPECT_EQ(b.scenario.rsrp_dbm, a.scenario.rsrp_dbm);
  EXPECT_EQ(b.scenario.prb_demand, a.scenario.prb_demand);
  EXPECT_EQ(b.scenario.n_prb_total, a.scenario.n_prb_total);
  EXPECT_EQ(b.scenario.prb_bandwidth_hz, a.scenario.prb_bandwidth_hz);
  EXPECT_EQ(b.graph.features, a.graph.features);
  EXPECT_EQ(b.graph.adjacency, a.graph.adjacency);
  EXPECT_EQ(b.graph.prb, a.graph.prb);
  EXPECT_EQ(dataset_record(b, "abc"), line);
}

TEST(DatasetRecord, MalformedInputIsIoError) {
  EXPECT_THROW(parse_dataset_record("{not json"), IoError);
  EXPECT_THROW(parse_dataset_record("{\"seed\": 1}"), IoError);
}

TEST(Dataset, FileAndManifest) {
  TempDir dir;
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < 10; ++i) samples.push_back(sample(100 + i));
  write_dataset(dir.path / "d.jsonl", samples, "0123");
  std::ifstream in(dir.path / "d.jsonl");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 10u);
  const auto back = read_dataset(dir.path / "d.jsonl");
  ASSERT_EQ(back.size(), 10u);
  EXPECT_EQ(back[7].scenario.sinr_db, samples[7].scenario.sinr_db);

  write_manifest(dir.path / "m.json", {"0123", 100, 10, "d.jsonl"});
  const auto m = read_manifest(dir.path / "m.json");
  EXPECT_EQ(m.config_digest, "0123");
  EXPECT_EQ(m.seed, 100u);
  EXPECT_EQ(m.records, 10u);
  EXPECT_EQ(m.dataset_file, "d.jsonl");
  EXPECT_THROW(read_dataset(dir.path / "missing.jsonl"), IoError);
}

TEST(Checkpoint, RoundTripWithState) {
  GatConfig gc;
  gc.n_cells = 3;
  gc.hidden1 = 4;
  gc.hidden2 = 3;
  TrainConfig tc;
  tc.lr = 1e-3;
  auto st = init_train_state(gc, tc, 9);
  st.epochs_done = 4;
  st.adam.step = 17;
  st.adam.m[0][0] = 0.125;
  st.best_test_loss = 321.5;
  st.best_model.layer1.W[0] = -7.0;
  Checkpoint c{st.model, NormStats{{1.0, 2.0}, {3.0, 1.0}}, st};
  const auto text = checkpoint_json(c);
  auto back = parse_checkpoint(text);
  EXPECT_EQ(flat(back.model), flat(c.model));
  EXPECT_EQ(back.norm.mean, c.norm.mean);
  EXPECT_EQ(back.norm.scale, c.norm.scale);
  ASSERT_TRUE(back.state.has_value());
  EXPECT_EQ(back.state->epochs_done, 4);
  EXPECT_EQ(back.state->adam.step, 17);
  EXPECT_EQ(back.state->adam.m, st.adam.m);
  EXPECT_EQ(back.state->adam.config.lr, 1e-3);
  EXPECT_EQ(back.state->best_test_loss, 321.5);
  EXPECT_EQ(back.state->best_model.layer1.W[0], -7.0);
  EXPECT_EQ(back.model.config.hidden1, 4);
  EXPECT_EQ(checkpoint_json(back), text);
}

TEST(Checkpoint, InfiniteBestLossAndNoState) {
  GatConfig gc;
  gc.n_cells = 2;
  gc.hidden1 = 2;
  gc.hidden2 = 2;
  auto st = init_train_state(gc, TrainConfig{}, 1);
  auto back = parse_checkpoint(checkpoint_json({st.model, {}, st}));
  EXPECT_TRUE(std::isinf(back.state->best_test_loss));
  auto plain = parse_checkpoint(checkpoint_json({st.model, {}, std::nullopt}));
  EXPECT_FALSE(plain.state.has_value());
}

TEST(Checkpoint, RejectsForeignOrCorruptFiles) {
  EXPECT_THROW(parse_checkpoint("{}"), IoError);
  EXPECT_THROW(parse_checkpoint("{\"format\": \"other\", \"version\": 1}"), IoError);
  GatConfig gc;
  gc.n_cells = 2;
  gc.hidden1 = 2;
  gc.hidden2 = 2;
  auto text = checkpoint_json({GatModel::init(gc, 1), {}, std::nullopt});
  const auto pos = text.find("\"shape\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(text.find('[', pos) + 1, 1, "9");
  EXPECT_THROW(parse_checkpoint(text), IoError);
}

TEST(History, CsvRoundTrip) {
  const std::vector<EpochStats> h{{1, 10.5, 11.25, 1e-3}, {2, 9.0 / 7.0, 1.0 / 3.0, 1e-3}};
  const auto text = history_csv(h);
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,mean_train_loss,mean_test_loss,lr");
  const auto back = parse_history_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].mean_train_loss, 9.0 / 7.0);
  EXPECT_EQ(back[1].mean_test_loss, 1.0 / 3.0);
  EXPECT_EQ(back[0].epoch, 1);
}

TEST(Text, AtomicWriteAndErrors) {
  TempDir dir;
  write_text_atomic(dir.path / "a.txt", "hello");
  EXPECT_EQ(read_text(dir.path / "a.txt"), "hello");
  write_text_atomic(dir.path / "a.txt", "again");
  EXPECT_EQ(read_text(dir.path / "a.txt"), "again");
  EXPECT_THROW(read_text(dir.path / "nope.txt"), IoError);
  EXPECT_THROW(write_text_atomic("/proc/nesua_no/a.txt", "x"), IoError);
}

}  // namespace
}  // namespace nesua
