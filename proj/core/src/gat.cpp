#include "nesua/gat.hpp"

#include <cmath>
#include <random>

#include "nesua/errors.hpp"

namespace nesua {

std::string to_string(ReadoutActivation a) { return a == ReadoutActivation::relu ? "relu" : "identity"; }

ReadoutActivation readout_activation_from_string(const std::string& s) {
  if (s == "relu") return ReadoutActivation::relu;
  if (s == "identity") return ReadoutActivation::identity;
  throw ConfigError("gat.readout_activation must be 'relu' or 'identity', got '" + s + "'");
}

void GatConfig::validate() const {
  if (n_cells < 1) throw ConfigError("GatConfig: n_cells must be >= 1");
  if (hidden1 < 1 || hidden2 < 1) throw ConfigError("GatConfig: hidden widths must be >= 1");
  if (!(negative_slope >= 0.0) || !std::isfinite(negative_slope)) {
    throw ConfigError("GatConfig: negative_slope must be finite and >= 0");
  }
  if (heads != 1) throw ConfigError("GatConfig: only heads = 1 is supported");
}

namespace {

ad::Tensor glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                  std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  ad::Tensor t({rows, cols});
  for (auto& v : t.values()) v = u(rng);
  t.requires_grad = true;
  return t;
}

GatLayerParams init_layer(std::size_t d_in, std::size_t d_out, double slope, std::mt19937_64& rng) {
  GatLayerParams l;
  l.W = glorot(d_out, d_in, d_in, d_out, rng);
  l.a = glorot(2 * d_out, 1, 2 * d_out, 1, rng);
  l.negative_slope = slope;
  return l;
}

}  // namespace

GatModel GatModel::init(const GatConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  GatModel m;
  m.config = config;
  const auto d0 = static_cast<std::size_t>(config.in_dim());
  const auto d1 = static_cast<std::size_t>(config.hidden1);
  const auto d2 = static_cast<std::size_t>(config.hidden2);
  const auto n = static_cast<std::size_t>(config.n_cells);
  m.layer1 = init_layer(d0, d1, config.negative_slope, rng);
  m.layer2 = init_layer(d1, d2, config.negative_slope, rng);
  m.readout_Q = glorot(d2, n, d2, n, rng);
  m.readout_B = ad::Tensor({1, n}, 0.0);
  m.readout_B.requires_grad = true;
  return m;
}

std::vector<std::pair<std::string, ad::Tensor*>> GatModel::named_parameters() {
  return {{"gat1.W", &layer1.W},   {"gat1.a", &layer1.a},      {"gat2.W", &layer2.W},
          {"gat2.a", &layer2.a},   {"readout.Q", &readout_Q},  {"readout.B", &readout_B}};
}

std::vector<ad::Tensor*> GatModel::parameters() {
  std::vector<ad::Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

BoundModel bind(ad::Tape& tape, GatModel& model) {
  BoundModel b;
  b.layer1 = {tape.parameter(model.layer1.W), tape.parameter(model.layer1.a), model.layer1.negative_slope};
  b.layer2 = {tape.parameter(model.layer2.W), tape.parameter(model.layer2.a), model.layer2.negative_slope};
  b.Q = tape.parameter(model.readout_Q);
  b.B = tape.parameter(model.readout_B);
  b.readout_activation = model.config.readout_activation;
  return b;
}

BoundModel bind_frozen(ad::Tape& tape, const GatModel& model) {
  BoundModel b;
  b.layer1 = {tape.constant(model.layer1.W), tape.constant(model.layer1.a), model.layer1.negative_slope};
  b.layer2 = {tape.constant(model.layer2.W), tape.constant(model.layer2.a), model.layer2.negative_slope};
  b.Q = tape.constant(model.readout_Q);
  b.B = tape.constant(model.readout_B);
  b.readout_activation = model.config.readout_activation;
  return b;
}

namespace {

// Scores from already-projected features Z = H W^T.
ad::Var scores_from_projection(ad::Var Z, const BoundLayer& layer) {
  const std::size_t d_out = Z.value().cols();
  const auto& a = layer.a.value();
  if (a.rank() != 2 || a.rows() != 2 * d_out || a.cols() != 1) {
    throw ContractError("attention: vector a has shape " + ad::shape_string(a.shape()) + ", expected [" +
                        std::to_string(2 * d_out) + "x1]");
  }
  // a^T [z_u || z_v] = a_self . z_u + a_neigh . z_v
  auto self_part = ad::matmul(Z, ad::slice_rows(layer.a, 0, d_out));
  auto neigh_part = ad::matmul(Z, ad::slice_rows(layer.a, d_out, 2 * d_out));
  return ad::leaky_relu(ad::outer_sum(self_part, neigh_part), layer.negative_slope);
}

void check_adjacency(ad::Var H, const MaskMatrix& adjacency) {
  const std::size_t k = H.value().rows();
  if (adjacency.rows() != k || adjacency.cols() != k) {
    throw ContractError("gat: adjacency is " + std::to_string(adjacency.rows()) + "x" +
                        std::to_string(adjacency.cols()) + " but there are " + std::to_string(k) + " nodes");
  }
}

}  // namespace

ad::Var attention_scores(ad::Var H, const BoundLayer& layer) {
  return scores_from_projection(ad::matmul(H, ad::transpose(layer.W)), layer);
}

ad::Var attention_coefficients(ad::Var H, const MaskMatrix& adjacency, const BoundLayer& layer) {
  check_adjacency(H, adjacency);
  return ad::row_softmax_masked(attention_scores(H, layer), &adjacency);
}

ad::Var gat_layer(ad::Var H, const MaskMatrix& adjacency, const BoundLayer& layer) {
  check_adjacency(H, adjacency);
  auto Z = ad::matmul(H, ad::transpose(layer.W));
  auto alpha = ad::row_softmax_masked(scores_from_projection(Z, layer), &adjacency);
  return ad::relu(ad::matmul(alpha, Z));
}

ad::Var readout(ad::Var H, const BoundModel& model) {
  auto logits = ad::add_row_broadcast(ad::matmul(H, model.Q), model.B);
  if (model.readout_activation == ReadoutActivation::relu) logits = ad::relu(logits);
  return ad::row_softmax(logits);
}

ad::Var forward(ad::Var features, const MaskMatrix& adjacency, const BoundModel& model) {
  auto h1 = gat_layer(features, adjacency, model.layer1);
  auto h2 = gat_layer(h1, adjacency, model.layer2);
  return readout(h2, model);
}

ad::Var forward(ad::Tape& tape, const GraphInstance& g, GatModel& model) {
  auto bound = bind(tape, model);
  return forward(tape.constant(ad::Tensor::from_matrix(g.features)), g.adjacency, bound);
}

MatrixD infer(const GraphInstance& g, const GatModel& model) {
  ad::Tape tape;
  auto bound = bind_frozen(tape, model);
  return forward(tape.constant(ad::Tensor::from_matrix(g.features)), g.adjacency, bound).value().to_matrix();
}

HardAssociation harden(const MatrixD& assoc) { return argmax_rows(assoc); }

}  // namespace nesua
