#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "stgraph/graph.hpp"
#include "stgraph/layers.hpp"

namespace stgraph {

// Architecture hyperparameters. Either n_nodes > m1 > m2 >= 1 (hierarchical
// pooling) or m1 == m2 == n_nodes (pooling disabled, assignments frozen to
// the identity).
struct ModelConfig {
  int n_nodes = 0;
  int m1 = 0;
  int m2 = 0;
  int f_in = 1;
  int f_out = 1;
  int hidden = 16;
  int cheb_k = 2;
  int t_in = 12;
  int t_out = 3;
  int assign_embed = 8;  // width of the free per-node embedding fed to P

  bool pooling_enabled() const { return m1 < n_nodes; }
  void validate() const;
};

// All trainable state of one model.
struct ModelParams {
  ModelConfig config;

  GraphConvParams enc_conv0, enc_conv1, dec_conv0, dec_conv1;
  PoolParams pool0, pool1;
  GruParams enc_gru0, enc_gru1, dec_gru0, dec_gru1;
  Param feedback_proj;  // H×F_out, maps encoder state s1 to the first decoder input
  Param static_embed;   // N×assign_embed, only in pooling mode

  // Fixed enumeration order; used by the optimizer and checkpoints.
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  void zero_grad();
};

ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

// Per-graph constants shared by every forward pass.
struct GraphContext {
  SpectralCache spectral;
  Matrix norm_adj;      // D^{−1/2} A D^{−1/2}
  Matrix static_stats;  // N×3 standardized [degree, mean weight, max weight]
};

GraphContext make_graph_context(const Graph& g);

// Copies parameter matrices onto a tape and harvests their gradients back
// after backward().
class Binder {
 public:
  explicit Binder(Tape& tape) : tape_(&tape) {}

  Value operator()(Param& p) {
    Value v = tape_->leaf(p.value, true);
    bound_.push_back({&p, v});
    return v;
  }

  // Adds each bound leaf's gradient into its Param::grad.
  void harvest();

 private:
  struct Entry {
    Param* param;
    Value value;
  };
  Tape* tape_;
  std::vector<Entry> bound_;
};

// One forward pass worth of tape-bound parameters, graph constants and the
// (static) pooling pyramid.
struct BoundModel {
  const ModelConfig* config = nullptr;
  Binder binder;

  Value lap;  // scaled Laplacian, constant
  Value adj;  // normalized adjacency, constant

  Value enc_theta0, enc_theta1, dec_theta0, dec_theta1;
  Activation enc_act0 = Activation::kLinear, enc_act1 = Activation::kLinear;
  Activation dec_act0 = Activation::kLinear, dec_act1 = Activation::kLinear;
  GruGates enc_g0, enc_g1, dec_g0, dec_g1;
  Value w_out, feedback;

  // Pooling mode only: row-stochastic assignments and pooled operators.
  Value assign0, assign1;      // N×M1, M1×M2
  Value assign0_t, assign1_t;  // transposes, shared by every timestep
  Value a_pool0, a_pool1;      // M1×M1, M2×M2

  explicit BoundModel(Tape& tape) : binder(tape) {}
};

// Binds parameters onto the tape and, in pooling mode, computes the
// assignment pyramid once (it is static across timesteps). Caches the
// realized assignment matrices in params.pool0/pool1.
BoundModel bind_model(Tape& tape, ModelParams& params, const GraphContext& ctx);

struct EncoderState {
  Value s0;  // M1×H
  Value s1;  // M2×H
};

// Runs the two-level encoder over t_in input frames (each n_nodes×f_in).
EncoderState encode(Tape& tape, BoundModel& bound,
                    const std::vector<Matrix>& x_seq);

struct DecodeStats {
  int teacher_steps = 0;
  int self_feedback_steps = 0;
};

// Mirrored two-level decoder producing t_out frames (each n_nodes×f_out).
// teacher frames, when given, are substituted for the model's own feedback
// with probability teacher_ratio per step (frames must be on the same scale
// as the encoder inputs). teacher_ratio > 0 requires teacher and rng.
std::vector<Value> decode(Tape& tape, BoundModel& bound,
                          const EncoderState& state, int t_out,
                          const std::vector<Matrix>* teacher,
                          double teacher_ratio, std::mt19937_64* rng,
                          DecodeStats* stats = nullptr);

// encode + decode with teacher forcing disabled.
std::vector<Value> forward(Tape& tape, ModelParams& params,
                           const GraphContext& ctx,
                           const std::vector<Matrix>& x_seq);

}  // namespace stgraph
