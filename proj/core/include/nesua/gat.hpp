#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nesua/association.hpp"
#include "nesua/autodiff.hpp"
#include "nesua/scenario.hpp"

namespace nesua {

enum class ReadoutActivation { relu, identity };

std::string to_string(ReadoutActivation a);
ReadoutActivation readout_activation_from_string(const std::string& s);  // ConfigError

struct GatConfig {
  int n_cells = 7;             // readout width; input width is 3 * n_cells
  int hidden1 = 512;
  int hidden2 = 512;
  double negative_slope = 0.2;
  ReadoutActivation readout_activation = ReadoutActivation::relu;
  int heads = 1;               // only single-head attention is implemented

  int in_dim() const noexcept { return 3 * n_cells; }
  void validate() const;       // ConfigError
};

struct GatLayerParams {
  ad::Tensor W;  // d_out x d_in
  ad::Tensor a;  // 2 d_out x 1; first half scores the receiving node, second half the neighbor
  double negative_slope = 0.2;
};

struct GatModel {
  GatConfig config;
  GatLayerParams layer1;
  GatLayerParams layer2;
  ad::Tensor readout_Q;  // d2 x N
  ad::Tensor readout_B;  // 1 x N, broadcast over UEs

  /// Glorot-uniform initialization, deterministic in seed.
  static GatModel init(const GatConfig& config, std::uint64_t seed);

  /// Parameters in checkpoint order: gat1.W, gat1.a, gat2.W, gat2.a, readout.Q, readout.B.
  std::vector<std::pair<std::string, ad::Tensor*>> named_parameters();
  std::vector<ad::Tensor*> parameters();
};

/// Layer parameters recorded on a tape.
struct BoundLayer {
  ad::Var W;
  ad::Var a;
  double negative_slope = 0.2;
};

struct BoundModel {
  BoundLayer layer1;
  BoundLayer layer2;
  ad::Var Q;
  ad::Var B;
  ReadoutActivation readout_activation = ReadoutActivation::relu;
};

/// Records every parameter of `model` on `tape` (gradients flow back into the model).
BoundModel bind(ad::Tape& tape, GatModel& model);
/// Records the parameters as constants (inference only).
BoundModel bind_frozen(ad::Tape& tape, const GatModel& model);

/// rho(u, v) = LeakyReLU(a^T [W h_u || W h_v]) for every ordered pair. Pairs with
/// adjacency 0 are still computed; attention_coefficients masks them out.
ad::Var attention_scores(ad::Var H, const BoundLayer& layer);

/// Row-wise softmax of the scores over each node's neighborhood (self-loop included).
ad::Var attention_coefficients(ad::Var H, const MaskMatrix& adjacency, const BoundLayer& layer);

/// h_u' = relu(sum_v alpha(u, v) W h_v) over the neighborhood of u.
ad::Var gat_layer(ad::Var H, const MaskMatrix& adjacency, const BoundLayer& layer);

/// S = row_softmax(act(H Q + B)).
ad::Var readout(ad::Var H, const BoundModel& model);

/// Full pipeline on a recorded feature matrix.
ad::Var forward(ad::Var features, const MaskMatrix& adjacency, const BoundModel& model);
/// Binds `model` on `tape` and runs the pipeline on g.
ad::Var forward(ad::Tape& tape, const GraphInstance& g, GatModel& model);

/// Frozen-model inference; returns the K x N association matrix.
MatrixD infer(const GraphInstance& g, const GatModel& model);

/// Row-wise argmax of S, ties toward the lowest cell index.
HardAssociation harden(const MatrixD& assoc);

}  // namespace nesua
