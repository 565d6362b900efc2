#include "nesua_cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iostream>
#include <mutex>
#include <sstream>

#include "nesua/errors.hpp"
#include "nesua/parallel.hpp"

namespace nesua::cli {

namespace fs = std::filesystem;

namespace {

void write_config(const RunConfig& cfg, const fs::path& out_dir) {
  write_text_atomic(out_dir / "config.json", run_config_json(cfg));
}

EvalOptions eval_options(const RunConfig& cfg, std::size_t threads = 0) {
  EvalOptions o;
  o.gbr.demand_mbps = cfg.scenario.ue_demand_mbps;
  o.include_oracle = cfg.eval.include_oracle;
  o.oracle_budget = cfg.eval.oracle_budget;
  o.subsinr = cfg.baseline.subsinr_aggregate;
  o.threads = threads;
  return o;
}

void check_cells(std::span<const Sample> samples, const RunConfig& cfg) {
  for (const auto& s : samples) {
    if (s.scenario.n_cells() != static_cast<std::size_t>(cfg.scenario.n_cells)) {
      throw ConfigError("dataset instance " + std::to_string(s.scenario.seed) + " has " +
                        std::to_string(s.scenario.n_cells()) + " cells but scenario.n_cells is " +
                        std::to_string(cfg.scenario.n_cells));
    }
  }
}

std::vector<Sample> load_samples(const fs::path& dataset, const RunConfig& cfg) {
  auto samples = read_dataset(resolve_dataset(dataset));
  if (samples.size() < 2) throw IoError("dataset " + dataset.string() + " holds fewer than two records");
  check_cells(samples, cfg);
  return samples;
}

/// Test split of raw samples, normalized with the statistics the model was trained with.
std::vector<Sample> test_split(std::vector<Sample> samples, const RunConfig& cfg, const NormStats& norm) {
  auto [train_idx, test_idx] = split_indices(samples.size(), cfg.train.split_fraction, cfg.train.shuffle_seed);
  std::vector<Sample> test;
  for (auto i : test_idx) {
    test.push_back(std::move(samples[i]));
    norm.apply(test.back().graph);
  }
  return test;
}

TrainResult train_dataset(const RunConfig& cfg, const Dataset& ds, const fs::path& out_dir,
                          std::optional<TrainState> resume, std::vector<EpochStats> prior_history) {
  const auto train_graphs = graphs_of(ds.train);
  const auto test_graphs = graphs_of(ds.test);
  TrainState state = resume ? std::move(*resume) : init_train_state(cfg.gat, cfg.train, cfg.seed);
  std::vector<EpochStats> history = std::move(prior_history);
  auto on_epoch = [&](const TrainState& st, const EpochStats& e) {
    history.push_back(e);
    if (cfg.train.checkpoint_every > 0 && e.epoch % cfg.train.checkpoint_every == 0) {
      write_checkpoint(out_dir / ("checkpoint_epoch_" + std::to_string(e.epoch) + ".json"),
                       Checkpoint{st.model, ds.norm, st});
      write_text_atomic(out_dir / "history.csv", history_csv(history));
    }
  };
  auto result = continue_training(std::move(state), train_graphs, test_graphs, cfg.train, cfg.loss, cfg.power,
                                  on_epoch);
  result.history = std::move(history);
  write_checkpoint(out_dir / "checkpoint_final.json", Checkpoint{result.state.model, ds.norm, result.state});
  write_checkpoint(out_dir / "checkpoint_best.json", Checkpoint{result.state.best_model, ds.norm, std::nullopt});
  write_text_atomic(out_dir / "history.csv", history_csv(result.history));
  return result;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string compact(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

fs::path resolve_dataset(const fs::path& p) {
  if (fs::is_directory(p)) return p / "dataset.jsonl";
  return p;
}

void cmd_gen(const RunConfig& cfg, const fs::path& out_dir) {
  const auto size = static_cast<std::size_t>(cfg.train.dataset_size);
  std::vector<Sample> samples(size);
  parallel_for(size, [&](std::size_t i) {
    samples[i].scenario = generate_scenario(cfg.scenario, cfg.scenario.rng_seed + i);
    samples[i].graph = build_graph(samples[i].scenario, cfg.scenario.gamma_th_db);
  });
  const std::string digest = config_digest(cfg.scenario);
  write_dataset(out_dir / "dataset.jsonl", samples, digest);
  write_manifest(out_dir / "manifest.json", DatasetManifest{digest, cfg.scenario.rng_seed, size, "dataset.jsonl"});
  write_config(cfg, out_dir);
}

void cmd_train(const RunConfig& cfg, const fs::path& dataset, const fs::path& out_dir,
               const std::optional<fs::path>& resume) {
  const Dataset ds = make_dataset(load_samples(dataset, cfg), cfg.train.split_fraction, cfg.train.shuffle_seed);
  std::optional<TrainState> state;
  std::vector<EpochStats> prior;
  if (resume) {
    Checkpoint ck = read_checkpoint(*resume);
    if (!ck.state) throw IoError("checkpoint " + resume->string() + " holds no training state to resume from");
    if (gat_config_json(ck.model.config) != gat_config_json(cfg.gat)) {
      throw ConfigError("gat settings differ from the checkpoint being resumed");
    }
    state = std::move(ck.state);
    if (fs::exists(out_dir / "history.csv")) {
      for (const auto& e : parse_history_csv(read_text(out_dir / "history.csv"))) {
        if (e.epoch <= state->epochs_done) prior.push_back(e);
      }
    }
  }
  fs::create_directories(out_dir);
  write_config(cfg, out_dir);
  train_dataset(cfg, ds, out_dir, std::move(state), std::move(prior));
}

Evaluation cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& dataset, const fs::path& out_dir) {
  const Checkpoint ck = read_checkpoint(checkpoint);
  if (ck.model.config.n_cells != cfg.scenario.n_cells) {
    throw ConfigError("checkpoint was trained for " + std::to_string(ck.model.config.n_cells) + " cells");
  }
  const auto test = test_split(load_samples(dataset, cfg), cfg, ck.norm);
  Evaluation e = evaluate_test_set(test, ck.model, cfg.power, eval_options(cfg));
  fs::create_directories(out_dir);
  write_config(cfg, out_dir);
  write_text_atomic(out_dir / "eval_instances.csv", comparison_csv(e));
  write_text_atomic(out_dir / "eval_summary.csv", summary_csv(e.stats));
  const auto n_maps = std::min<std::size_t>(static_cast<std::size_t>(cfg.eval.heatmap_instances), test.size());
  for (std::size_t i = 0; i < n_maps; ++i) {
    export_heatmaps(test[i].scenario, e.instances[i], out_dir / "heatmaps" / ("instance_" + std::to_string(i)));
  }
  return e;
}

SweepKind sweep_kind_from_string(const std::string& s) {
  if (s == "bandwidth") return SweepKind::bandwidth;
  if (s == "lambda") return SweepKind::lambda;
  throw ConfigError("unknown sweep kind '" + s + "' (expected bandwidth or lambda)");
}

std::string bandwidth_point_name(double bandwidth_mhz, int n_ues) {
  return "W" + compact(bandwidth_mhz) + "_K" + std::to_string(n_ues);
}

std::string lambda_point_name(double ratio) { return "ratio_" + compact(ratio); }

fs::path cmd_sweep(const RunConfig& cfg, SweepKind kind, const fs::path& out_dir) {
  struct Point {
    RunConfig cfg;
    std::string name;
    std::vector<std::pair<std::string, double>> coords;
    GatModel model;
    Dataset data;
  };
  std::vector<Point> points;
  if (kind == SweepKind::bandwidth) {
    for (double w : cfg.sweep.bandwidths_mhz) {
      for (int k : cfg.sweep.ue_counts) {
        Point p{cfg, bandwidth_point_name(w, k), {}, {}, {}};
        p.cfg.scenario.bandwidth_mhz = w;
        p.cfg.scenario.n_ues = k;
        points.push_back(std::move(p));
      }
    }
  } else {
    for (double r : cfg.sweep.lambda_ratios) {
      Point p{cfg, lambda_point_name(r), {}, {}, {}};
      p.cfg.loss.lambda1 = cfg.sweep.lambda1;
      p.cfg.loss.lambda2 = r * cfg.sweep.lambda1;
      points.push_back(std::move(p));
    }
  }
  const fs::path root = out_dir / (kind == SweepKind::bandwidth ? "bandwidth" : "lambda");
  fs::create_directories(root);
  write_config(cfg, out_dir);

  const std::size_t threads = worker_threads();
  std::mutex log_mutex;
  parallel_for(points.size(), [&](std::size_t i) {
    Point& p = points[i];
    p.cfg.validate();
    const fs::path dir = root / p.name;
    p.data = prepare_dataset(p.cfg.scenario, static_cast<std::size_t>(p.cfg.train.dataset_size),
                             p.cfg.train.split_fraction, p.cfg.scenario.rng_seed, p.cfg.train.shuffle_seed);
    if (fs::exists(dir / "DONE")) {
      p.model = read_checkpoint(dir / "checkpoint_best.json").model;
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "sweep: " << p.name << " already complete, reusing its checkpoint\n";
      return;
    }
    fs::create_directories(dir);
    write_config(p.cfg, dir);
    auto result = train_dataset(p.cfg, p.data, dir, std::nullopt, {});
    p.model = result.state.best_model;
    const auto e = evaluate_test_set(p.data.test, p.model, p.cfg.power, eval_options(p.cfg, 1));
    write_text_atomic(dir / "eval_summary.csv", summary_csv(e.stats));
    write_text_atomic(dir / "DONE", "");
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << "sweep: " << p.name << " done\n";
  }, threads);

  auto lookup = [&](const std::string& name) {
    for (const auto& p : points) {
      if (p.name == name) return GridInput{&p.model, p.data.test};
    }
    return GridInput{};
  };
  const auto opt = eval_options(cfg);
  SweepResult r;
  if (kind == SweepKind::bandwidth) {
    r = sweep_bandwidth(
        cfg.sweep.bandwidths_mhz, cfg.sweep.ue_counts,
        [&](double w, int k) { return lookup(bandwidth_point_name(w, k)); }, cfg.power, opt);
  } else {
    r = sweep_lambda(
        cfg.sweep.lambda_ratios, [&](double ratio) { return lookup(lambda_point_name(ratio)); }, cfg.power, opt);
  }
  return write_sweep_csv(r, out_dir, utc_timestamp());
}

}  // namespace nesua::cli
