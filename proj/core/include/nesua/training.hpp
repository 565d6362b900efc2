#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "nesua/autodiff.hpp"
#include "nesua/gat.hpp"
#include "nesua/power.hpp"
#include "nesua/scenario.hpp"

namespace nesua {

struct LossConfig {
  double lambda1 = 1.0;  // one-hot (association sharpness) weight
  double lambda2 = 1.0;  // PRB-load norm weight
  void validate() const;
};

struct TrainConfig {
  int dataset_size = 10000;
  double split_fraction = 0.8;
  int epochs = 5000;
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t shuffle_seed = 0;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  void validate() const;
};

struct LossTerms {
  ad::Var total;
  ad::Var power;
  ad::Var sharpness;  // lambda1 * (K - Tr(S S^T))
  ad::Var load_norm;  // lambda2 * ||p_hat||_2
};

/// power_soft(S) + lambda1 (K - Tr(S S^T)) + lambda2 ||S^T P diag||_2.
LossTerms loss_terms(ad::Var assoc, const MatrixD& prb, const PowerParams& p, const LossConfig& lc,
                     int n_prb_total);
inline ad::Var loss(ad::Var assoc, const MatrixD& prb, const PowerParams& p, const LossConfig& lc,
                    int n_prb_total) {
  return loss_terms(assoc, prb, p, lc, n_prb_total).total;
}

/// One network realization together with its (normalized) graph.
struct Sample {
  Scenario scenario;
  GraphInstance graph;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
  NormStats norm;
};

/// Number of training samples for a split: floor(size * fraction), kept within [1, size - 1].
std::size_t train_count(std::size_t size, double split_fraction);

/// Shuffled index partition of [0, size) into (train, test); deterministic in shuffle_seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t size, double split_fraction,
                                                                           std::uint64_t shuffle_seed);

/// Splits raw samples, fits normalization on the training part and applies it to both.
Dataset make_dataset(std::vector<Sample> samples, double split_fraction, std::uint64_t shuffle_seed);

/// Generates `size` scenarios with seeds seed + i, builds graphs and splits them.
Dataset prepare_dataset(const ScenarioConfig& cfg, std::size_t size, double split_fraction, std::uint64_t seed,
                        std::uint64_t shuffle_seed);

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_train_loss = 0.0;
  double mean_test_loss = 0.0;
  double lr = 0.0;
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  GatModel model;
  ad::AdamState adam;
  int epochs_done = 0;
  GatModel best_model;
  double best_test_loss = std::numeric_limits<double>::infinity();
};

struct TrainResult {
  TrainState state;
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const TrainState&, const EpochStats&)>;

/// Mean loss of a frozen model over a set of graphs.
double mean_loss(std::span<const GraphInstance> graphs, const GatModel& model, const PowerParams& p,
                 const LossConfig& lc);

/// Fresh training state: initialized model (seeded) and zeroed Adam moments.
TrainState init_train_state(const GatConfig& gc, const TrainConfig& tc, std::uint64_t seed);

/// Continues `state` until tc.epochs epochs are done. One Adam step per training
/// instance, instances visited in an order that depends only on (shuffle_seed, epoch),
/// so a resumed run replays an uninterrupted one exactly. Throws NumericError on a
/// non-finite loss.
TrainResult continue_training(TrainState state, std::span<const GraphInstance> train,
                              std::span<const GraphInstance> test, const TrainConfig& tc, const LossConfig& lc,
                              const PowerParams& p, const EpochCallback& on_epoch = {});

TrainResult train(std::span<const GraphInstance> train, std::span<const GraphInstance> test, const TrainConfig& tc,
                  const LossConfig& lc, const PowerParams& p, const GatConfig& gc, std::uint64_t seed,
                  const EpochCallback& on_epoch = {});

std::vector<GraphInstance> graphs_of(std::span<const Sample> samples);

}  // namespace nesua
