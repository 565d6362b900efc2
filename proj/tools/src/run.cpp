#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nesua/errors.hpp"
#include "nesua_cli/commands.hpp"

namespace nesua::cli {

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config file (sections scenario, power, gat, train, eval, baseline, sweep)");
  cmd->add_option("--seed", a.seed, "Sets both seed (model init) and scenario.rng_seed (dataset base seed)");
  cmd->add_option("--out", a.out, "Output directory (default: out_dir from the config)");
  cmd->add_option("--set", a.overrides, "Override one key, e.g. --set train.epochs=20 (repeatable)");
}

RunConfig load_config(const CommonArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : parse_run_config(read_text(a.config_path));
  for (const auto& o : a.overrides) apply_override(cfg, o);
  if (a.seed) {
    cfg.seed = *a.seed;
    cfg.scenario.rng_seed = *a.seed;
  }
  if (!a.out.empty()) cfg.out_dir = a.out;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--grid entry '" + item + "' is not a number");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"nesua: GNN user association for network energy saving"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 ok, 2 config error, 3 I/O error, 4 numeric abort, 1 other.\n"
             "NESUA_THREADS caps worker threads.\n\nDefault configuration:\n" +
             run_config_json(RunConfig{}));

  CommonArgs gen_args, train_args, eval_args, sweep_args;
  std::string dataset, checkpoint, grid, kind;

  auto* gen = app.add_subcommand("gen", "Generate a dataset (dataset.jsonl + manifest.json)");
  add_common(gen, gen_args);

  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  add_common(train, train_args);
  train->add_option("--dataset", dataset, "Dataset file or directory")->required();
  train->add_option("--checkpoint", checkpoint, "Resume from this checkpoint's training state");

  auto* eval = app.add_subcommand("eval", "Compare GNN, RSRP, GA-SubSINR and oracle on the test split");
  add_common(eval, eval_args);
  eval->add_option("--dataset", dataset, "Dataset file or directory")->required();
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate one model per grid point");
  add_common(sweep, sweep_args);
  sweep->add_option("kind", kind, "bandwidth or lambda")->required();
  sweep->add_option("--grid", grid,
                    "Comma-separated grid: bandwidths in MHz (bandwidth) or lambda2/lambda1 ratios (lambda)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*gen) {
      const auto cfg = load_config(gen_args);
      cmd_gen(cfg, cfg.out_dir);
    } else if (*train) {
      const auto cfg = load_config(train_args);
      cmd_train(cfg, dataset, cfg.out_dir,
                checkpoint.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoint));
    } else if (*eval) {
      const auto cfg = load_config(eval_args);
      const auto e = cmd_eval(cfg, checkpoint, dataset, cfg.out_dir);
      std::cout << summary_csv(e.stats);
    } else if (*sweep) {
      auto cfg = load_config(sweep_args);
      const auto k = sweep_kind_from_string(kind);
      if (!grid.empty()) {
        const auto values = parse_grid(grid);
        if (k == SweepKind::bandwidth) {
          cfg.sweep.bandwidths_mhz = values;
        } else {
          cfg.sweep.lambda_ratios = values;
        }
        cfg.validate();
      }
      std::cout << cmd_sweep(cfg, k, cfg.out_dir).string() << "\n";
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kNumericAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}

}  // namespace nesua::cli
