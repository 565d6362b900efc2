#include "nesua/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "nesua/config.hpp"
#include "nesua/errors.hpp"

namespace nesua {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  if (f.bad()) throw IoError("read failed: " + path.string());
  return os.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f << text;
    f.flush();
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace {

template <typename T>
json matrix_json(const Matrix<T>& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
Matrix<T> matrix_from(const json& j, const char* field) {
  if (!j.is_array()) throw IoError(std::string("dataset field '") + field + "' is not a matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.front().size();
  Matrix<T> m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw IoError(std::string("dataset field '") + field + "' has ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<T>();
  }
  return m;
}

json points_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

std::vector<Point2> points_from(const json& j) {
  std::vector<Point2> pts;
  for (const auto& p : j) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw IoError(std::string("record is missing field '") + name + "'");
  return *it;
}

}  // namespace

std::string dataset_record(const Sample& smp, const std::string& config_digest) {
  const Scenario& s = smp.scenario;
  const std::size_t K = s.n_ues(), N = s.n_cells(), T = static_cast<std::size_t>(s.n_prb_total);
  json prb_db = json::array();
  for (std::size_t k = 0; k < K; ++k) {
    json per_ue = json::array();
    for (std::size_t n = 0; n < N; ++n) {
      const auto v = s.sinr_prbs(k, n);
      per_ue.push_back(json(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(T))));
    }
    prb_db.push_back(std::move(per_ue));
  }
  // Required fields first; the rest make a record self-contained.
  json rec = json::object();
  rec["seed"] = s.seed;
  rec["bs_xy"] = points_json(s.bs_positions);
  rec["ue_xy"] = points_json(s.ue_positions);
  rec["sinr_db"] = matrix_json(s.sinr_db);
  rec["sinr_prb_db"] = std::move(prb_db);
  rec["rsrp_dbm"] = matrix_json(s.rsrp_dbm);
  rec["prb"] = matrix_json(s.prb_demand);
  rec["adj"] = matrix_json(smp.graph.adjacency);
  rec["feat"] = matrix_json(smp.graph.features);
  rec["config_digest"] = config_digest;
  rec["dist_m"] = matrix_json(s.distance_m);
  rec["n_prb_total"] = s.n_prb_total;
  rec["prb_bw_hz"] = s.prb_bandwidth_hz;
  return rec.dump();
}

Sample parse_dataset_record(const std::string& line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("malformed dataset record: ") + e.what());
  }
  try {
    Sample smp;
    Scenario& s = smp.scenario;
    s.seed = field(rec, "seed").get<std::uint64_t>();
    s.bs_positions = points_from(field(rec, "bs_xy"));
    s.ue_positions = points_from(field(rec, "ue_xy"));
    s.sinr_db = matrix_from<double>(field(rec, "sinr_db"), "sinr_db");
    s.rsrp_dbm = matrix_from<double>(field(rec, "rsrp_dbm"), "rsrp_dbm");
    s.prb_demand = matrix_from<int>(field(rec, "prb"), "prb");
    s.distance_m = matrix_from<double>(field(rec, "dist_m"), "dist_m");
    s.n_prb_total = field(rec, "n_prb_total").get<int>();
    s.prb_bandwidth_hz = field(rec, "prb_bw_hz").get<double>();
    const std::size_t K = s.distance_m.rows(), N = s.distance_m.cols(), T = static_cast<std::size_t>(s.n_prb_total);
    const json& prb_db = field(rec, "sinr_prb_db");
    s.sinr_prb_db.reserve(K * N * T);
    if (prb_db.size() != K) throw IoError("sinr_prb_db has the wrong number of UEs");
    for (const auto& per_ue : prb_db) {
      if (per_ue.size() != N) throw IoError("sinr_prb_db has the wrong number of cells");
      for (const auto& per_cell : per_ue) {
        if (per_cell.size() != T) throw IoError("sinr_prb_db has the wrong number of PRBs");
        for (const auto& v : per_cell) s.sinr_prb_db.push_back(v.get<double>());
      }
    }
    GraphInstance& g = smp.graph;
    g.adjacency = matrix_from<std::uint8_t>(field(rec, "adj"), "adj");
    g.features = matrix_from<double>(field(rec, "feat"), "feat");
    g.prb = prb_demand_matrix(s);
    g.n_prb_total = s.n_prb_total;
    g.scenario_seed = s.seed;
    if (s.sinr_db.rows() != K || s.sinr_db.cols() != N || s.prb_demand.rows() != K || s.prb_demand.cols() != N ||
        g.adjacency.rows() != K || g.adjacency.cols() != K || g.features.rows() != K ||
        g.features.cols() != 3 * N || s.ue_positions.size() != K || s.bs_positions.size() != N) {
      throw IoError("dataset record has inconsistent shapes (seed " + std::to_string(s.seed) + ")");
    }
    return smp;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed dataset record: ") + e.what());
  }
}

void write_dataset(const fs::path& path, std::span<const Sample> samples, const std::string& config_digest) {
  std::string text;
  for (const auto& s : samples) {
    text += dataset_record(s, config_digest);
    text += '\n';
  }
  write_text_atomic(path, text);
}

std::vector<Sample> read_dataset(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open dataset " + path.string());
  std::vector<Sample> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(parse_dataset_record(line));
  }
  if (f.bad()) throw IoError("read failed: " + path.string());
  return out;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  json j{{"config_digest", m.config_digest}, {"seed", m.seed}, {"records", m.records}, {"dataset_file", m.dataset_file}};
  write_text_atomic(path, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& path) {
  try {
    const json j = json::parse(read_text(path));
    DatasetManifest m;
    m.config_digest = j.at("config_digest").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.records = j.at("records").get<std::size_t>();
    m.dataset_file = j.at("dataset_file").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
}

// ---- checkpoints ----------------------------------------------------------------

namespace {

constexpr const char* kCheckpointFormat = "nesua-checkpoint";
constexpr int kCheckpointVersion = 1;

json tensors_json(GatModel& m) {
  json arr = json::array();
  for (auto& [name, t] : m.named_parameters()) {
    arr.push_back({{"name", name}, {"shape", t->shape()}, {"values", std::vector<double>(t->values().begin(), t->values().end())}});
  }
  return arr;
}

void load_tensors(const json& arr, GatModel& m) {
  auto named = m.named_parameters();
  if (arr.size() != named.size()) throw IoError("checkpoint has " + std::to_string(arr.size()) + " tensors, expected " +
                                                std::to_string(named.size()));
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, t] = named[i];
    const json& e = arr[i];
    if (e.at("name").get<std::string>() != name) {
      throw IoError("checkpoint tensor " + std::to_string(i) + " is '" + e.at("name").get<std::string>() +
                    "', expected '" + name + "'");
    }
    const auto shape = e.at("shape").get<ad::Shape>();
    if (shape != t->shape()) {
      throw IoError("checkpoint tensor '" + name + "' has shape " + ad::shape_string(shape) + ", model expects " +
                    ad::shape_string(t->shape()));
    }
    const auto values = e.at("values").get<std::vector<double>>();
    if (values.size() != t->numel()) throw IoError("checkpoint tensor '" + name + "' has the wrong element count");
    std::copy(values.begin(), values.end(), t->values().begin());
  }
}

json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string checkpoint_json(const Checkpoint& c) {
  Checkpoint copy = c;  // named_parameters needs mutable access
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["gat"] = json::parse(gat_config_json(copy.model.config));
  j["parameters"] = tensors_json(copy.model);
  j["norm"] = {{"mean", copy.norm.mean}, {"scale", copy.norm.scale}};
  if (copy.state) {
    auto& st = *copy.state;
    json adam{{"step", st.adam.step},
              {"lr", st.adam.config.lr},
              {"beta1", st.adam.config.beta1},
              {"beta2", st.adam.config.beta2},
              {"eps", st.adam.config.eps},
              {"m", st.adam.m},
              {"v", st.adam.v}};
    j["train_state"] = {{"epochs_done", st.epochs_done},
                        {"adam", std::move(adam)},
                        {"model", tensors_json(st.model)},
                        {"best_test_loss", double_or_null(st.best_test_loss)},
                        {"best_model", tensors_json(st.best_model)}};
  }
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != kCheckpointFormat) throw IoError("not a checkpoint file");
    if (j.at("version").get<int>() != kCheckpointVersion) throw IoError("unsupported checkpoint version");
    Checkpoint c;
    GatConfig gc;
    const json& g = j.at("gat");
    gc.n_cells = g.at("n_cells").get<int>();
    gc.hidden1 = g.at("hidden1").get<int>();
    gc.hidden2 = g.at("hidden2").get<int>();
    gc.negative_slope = g.at("negative_slope").get<double>();
    gc.readout_activation = readout_activation_from_string(g.at("readout_activation").get<std::string>());
    gc.heads = g.at("heads").get<int>();
    c.model = GatModel::init(gc, 0);
    load_tensors(j.at("parameters"), c.model);
    c.norm.mean = j.at("norm").at("mean").get<std::vector<double>>();
    c.norm.scale = j.at("norm").at("scale").get<std::vector<double>>();
    if (auto it = j.find("train_state"); it != j.end()) {
      TrainState st;
      st.epochs_done = it->at("epochs_done").get<int>();
      st.model = GatModel::init(gc, 0);
      load_tensors(it->at("model"), st.model);
      st.best_model = GatModel::init(gc, 0);
      load_tensors(it->at("best_model"), st.best_model);
      const json& best = it->at("best_test_loss");
      st.best_test_loss = best.is_null() ? std::numeric_limits<double>::infinity() : best.get<double>();
      const json& a = it->at("adam");
      st.adam.step = a.at("step").get<std::int64_t>();
      st.adam.config = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                        a.at("eps").get<double>()};
      st.adam.m = a.at("m").get<std::vector<std::vector<double>>>();
      st.adam.v = a.at("v").get<std::vector<std::vector<double>>>();
      c.state = std::move(st);
    }
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_checkpoint(const fs::path& path, const Checkpoint& c) { write_text_atomic(path, checkpoint_json(c)); }

Checkpoint read_checkpoint(const fs::path& path) { return parse_checkpoint(read_text(path)); }

// ---- history --------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string history_csv(std::span<const EpochStats> history) {
  std::string out = "epoch,mean_train_loss,mean_test_loss,lr\n";
  for (const auto& h : history) {
    out += std::to_string(h.epoch) + "," + fmt(h.mean_train_loss) + "," + fmt(h.mean_test_loss) + "," + fmt(h.lr) + "\n";
  }
  return out;
}

std::vector<EpochStats> parse_history_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<EpochStats> out;
  if (!std::getline(is, line) || line.rfind("epoch,", 0) != 0) throw IoError("history file lacks its header row");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    EpochStats e;
    std::istringstream ls(line);
    std::string cell;
    try {
      std::getline(ls, cell, ',');
      e.epoch = std::stoi(cell);
      std::getline(ls, cell, ',');
      e.mean_train_loss = std::stod(cell);
      std::getline(ls, cell, ',');
      e.mean_test_loss = std::stod(cell);
      std::getline(ls, cell, ',');
      e.lr = std::stod(cell);
    } catch (const std::exception&) {
      throw IoError("malformed history row: " + line);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace nesua
