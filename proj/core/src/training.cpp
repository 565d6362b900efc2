#include "nesua/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "nesua/errors.hpp"

namespace nesua {

void LossConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2)) {
    throw ConfigError("LossConfig: lambda1 and lambda2 must be finite and >= 0");
  }
}

void TrainConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("TrainConfig: split_fraction must lie in (0, 1)");
  if (dataset_size < 2) throw ConfigError("TrainConfig: dataset_size must be >= 2");
  if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("TrainConfig: beta1 and beta2 must lie in [0, 1)");
  }
  if (checkpoint_every < 0) throw ConfigError("TrainConfig: checkpoint_every must be >= 0");
}

LossTerms loss_terms(ad::Var assoc, const MatrixD& prb, const PowerParams& p, const LossConfig& lc,
                     int n_prb_total) {
  const double n_ues = static_cast<double>(prb.rows());
  LossTerms t;
  t.power = network_power_soft(assoc, prb, p, n_prb_total);
  t.sharpness = ad::scale(ad::add_scalar(ad::scale(ad::trace_of_gram(assoc), -1.0), n_ues), lc.lambda1);
  t.load_norm = ad::scale(ad::l2_norm(soft_cell_load(assoc, prb)), lc.lambda2);
  t.total = ad::add(ad::add(t.power, t.sharpness), t.load_norm);
  return t;
}

std::size_t train_count(std::size_t size, double split_fraction) {
  if (size < 2) throw ArgumentError("dataset needs at least two samples to split");
  auto n = static_cast<std::size_t>(std::floor(static_cast<double>(size) * split_fraction + 1e-9));
  return std::clamp<std::size_t>(n, 1, size - 1);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t size, double split_fraction,
                                                                           std::uint64_t shuffle_seed) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_train = train_count(size, split_fraction);
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {std::move(train), std::move(test)};
}

std::vector<GraphInstance> graphs_of(std::span<const Sample> samples) {
  std::vector<GraphInstance> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.graph);
  return out;
}

Dataset make_dataset(std::vector<Sample> samples, double split_fraction, std::uint64_t shuffle_seed) {
  auto [train_idx, test_idx] = split_indices(samples.size(), split_fraction, shuffle_seed);
  Dataset ds;
  for (auto i : train_idx) ds.train.push_back(std::move(samples[i]));
  for (auto i : test_idx) ds.test.push_back(std::move(samples[i]));
  const auto train_graphs = graphs_of(ds.train);
  ds.norm = NormStats::fit(train_graphs);
  for (auto& s : ds.train) ds.norm.apply(s.graph);
  for (auto& s : ds.test) ds.norm.apply(s.graph);
  return ds;
}

Dataset prepare_dataset(const ScenarioConfig& cfg, std::size_t size, double split_fraction, std::uint64_t seed,
                        std::uint64_t shuffle_seed) {
  if (size < 2) throw ArgumentError("prepare_dataset: size must be >= 2");
  std::vector<Sample> samples;
  samples.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    Sample s;
    s.scenario = generate_scenario(cfg, seed + i);
    s.graph = build_graph(s.scenario, cfg.gamma_th_db);
    samples.push_back(std::move(s));
  }
  return make_dataset(std::move(samples), split_fraction, shuffle_seed);
}

double mean_loss(std::span<const GraphInstance> graphs, const GatModel& model, const PowerParams& p,
                 const LossConfig& lc) {
  if (graphs.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& g : graphs) {
    ad::Tape tape;
    auto bound = bind_frozen(tape, model);
    auto S = forward(tape.constant(ad::Tensor::from_matrix(g.features)), g.adjacency, bound);
    acc += loss(S, g.prb, p, lc, g.n_prb_total).item();
  }
  return acc / static_cast<double>(graphs.size());
}

TrainState init_train_state(const GatConfig& gc, const TrainConfig& tc, std::uint64_t seed) {
  TrainState st;
  st.model = GatModel::init(gc, seed);
  st.best_model = st.model;
  st.adam = ad::AdamState::init(st.model.parameters(), {tc.lr, tc.beta1, tc.beta2, 1e-8});
  return st;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t shuffle_seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(shuffle_seed), static_cast<std::uint32_t>(shuffle_seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x6e657375u};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

TrainResult continue_training(TrainState state, std::span<const GraphInstance> train,
                              std::span<const GraphInstance> test, const TrainConfig& tc, const LossConfig& lc,
                              const PowerParams& p, const EpochCallback& on_epoch) {
  tc.validate();
  lc.validate();
  p.validate();
  if (train.empty()) throw ArgumentError("train: training split is empty");
  const std::size_t n_cells = static_cast<std::size_t>(state.model.config.n_cells);
  for (const auto& g : train) {
    if (g.n_cells() != n_cells) throw ArgumentError("train: instances must share the model's cell count");
  }
  for (const auto& g : test) {
    if (g.n_cells() != n_cells) throw ArgumentError("train: instances must share the model's cell count");
  }

  TrainResult result;
  auto params = state.model.parameters();
  state.adam.config.lr = tc.lr;
  state.adam.config.beta1 = tc.beta1;
  state.adam.config.beta2 = tc.beta2;

  for (int epoch = state.epochs_done + 1; epoch <= tc.epochs; ++epoch) {
    double acc = 0.0;
    const auto order = epoch_order(train.size(), tc.shuffle_seed, epoch);
    for (std::size_t step = 0; step < order.size(); ++step) {
      const auto& g = train[order[step]];
      ad::zero_grad(params);
      ad::Tape tape;
      auto S = forward(tape, g, state.model);
      auto L = loss(S, g.prb, p, lc, g.n_prb_total);
      const double value = L.item();
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", step " << step << " (instance " << order[step]
           << ", scenario seed " << g.scenario_seed << ")";
        throw NumericError(os.str());
      }
      tape.backward(L);
      ad::adam_step(params, state.adam);
      acc += value;
    }
    EpochStats st;
    st.epoch = epoch;
    st.mean_train_loss = acc / static_cast<double>(train.size());
    st.mean_test_loss = test.empty() ? st.mean_train_loss : mean_loss(test, state.model, p, lc);
    st.lr = state.adam.config.lr;
    if (!std::isfinite(st.mean_test_loss)) {
      throw NumericError("non-finite test loss at epoch " + std::to_string(epoch));
    }
    state.epochs_done = epoch;
    if (st.mean_test_loss < state.best_test_loss) {
      state.best_test_loss = st.mean_test_loss;
      state.best_model = state.model;
    }
    result.history.push_back(st);
    if (on_epoch) on_epoch(state, st);
  }
  result.state = std::move(state);
  return result;
}

TrainResult train(std::span<const GraphInstance> train, std::span<const GraphInstance> test, const TrainConfig& tc,
                  const LossConfig& lc, const PowerParams& p, const GatConfig& gc, std::uint64_t seed,
                  const EpochCallback& on_epoch) {
  return continue_training(init_train_state(gc, tc, seed), train, test, tc, lc, p, on_epoch);
}

}  // namespace nesua
