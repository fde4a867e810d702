#pragma once

#include <random>
#include <string>
#include <utility>

#include "stgraph/autodiff.hpp"

namespace stgraph {

enum class Activation { kLinear, kRelu };

// Trainable dense matrix plus its persistent gradient accumulator.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  int rows() const { return static_cast<int>(value.rows()); }
  int cols() const { return static_cast<int>(value.cols()); }
  bool empty() const { return value.size() == 0; }
  void zero_grad() { grad.setZero(); }
};

// Uniform init in [−1/√fan_in, +1/√fan_in]; fan_in defaults to the row count.
Param make_param(std::string name, int rows, int cols, std::mt19937_64& rng,
                 int fan_in = 0);

struct GraphConvParams {
  Param theta;  // (K·F_in)×F_out
  int cheb_k = 1;
  Activation activation = Activation::kLinear;
};

struct PoolParams {
  Param assign_weights;      // F_s×M logits projection behind the assignment
  int clusters = 0;          // M
  Matrix cached_assignment;  // N×M row-stochastic, populated on forward
  bool assignment_ready = false;

  // Realized assignment of the last forward pass; throws StateError if no
  // pass has run yet.
  const Matrix& assignment() const {
    if (!assignment_ready)
      throw StateError("pool assignment not computed; run a forward pass");
    return cached_assignment;
  }
};

// Gate matrices act on the concatenation [h_prev, x] (shape (H+F)×H);
// biases are 1×H row vectors. w_o is empty unless this cell projects
// an output.
struct GruParams {
  Param w_z, w_r, w_h;
  Param b_z, b_r, b_h;
  Param w_o;  // H×F_out, optional
  int hidden = 0;
  int input_dim = 0;
};

GruParams make_gru_params(const std::string& prefix, int input_dim, int hidden,
                          int output_dim, std::mt19937_64& rng);

// Tape-bound views of the gate parameters for one forward pass.
struct GruGates {
  Value w_z, w_r, w_h, b_z, b_r, b_h;
};

// Chebyshev spectral convolution: stacks [T₀x … T_{K−1}x] column-wise and
// applies theta, then the activation. theta must have K·F_in rows.
Value graph_conv(Value scaled_lap, Value x, Value theta, int cheb_k,
                 Activation activation);

// Single-hop dense convolution act(A·x·theta) over an explicit operator.
Value graph_conv_dense(Value op, Value x, Value theta, Activation activation);

// Soft cluster assignment: row_softmax(relu(op·x_static·weights)).
// Rows are nonnegative and sum to 1.
Value compute_assignment(Value op, Value x_static, Value assign_weights);

// Coarsening: (PᵀaP, Pᵀx). Both outputs stay differentiable.
std::pair<Value, Value> pool(Value a, Value x, Value assignment);

// Expansion back to the fine node set: P·x_pool, with the same assignment
// matrix the matching pool level used.
Value unpool(Value x_pool, Value assignment);

// Gated recurrent step over per-node rows:
//   z = σ([h,x]·w_z + b_z), r = σ([h,x]·w_r + b_r),
//   h̃ = tanh([r⊙h, x]·w_h + b_h), h' = (1−z)⊙h + z⊙h̃.
Value gru_step(Value h_prev, Value x_in, const GruGates& gates);

// Linear readout y = h·w_o.
Value output_proj(Value h, Value w_o);

}  // namespace stgraph
