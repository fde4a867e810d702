#include "stgraph/layers.hpp"

#include <cmath>

#include "stgraph/graph.hpp"

namespace stgraph {

Param make_param(std::string name, int rows, int cols, std::mt19937_64& rng,
                 int fan_in) {
  if (rows < 1 || cols < 1)
    throw ParameterError("make_param(" + name + "): shape " +
                         shape_str(rows, cols) + " is degenerate");
  if (fan_in <= 0) fan_in = rows;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Param p;
  p.name = std::move(name);
  p.value.resize(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) p.value(i, j) = dist(rng);
  p.grad = Matrix::Zero(rows, cols);
  return p;
}

GruParams make_gru_params(const std::string& prefix, int input_dim, int hidden,
                          int output_dim, std::mt19937_64& rng) {
  GruParams g;
  g.hidden = hidden;
  g.input_dim = input_dim;
  const int gate_rows = hidden + input_dim;
  g.w_z = make_param(prefix + ".w_z", gate_rows, hidden, rng);
  g.w_r = make_param(prefix + ".w_r", gate_rows, hidden, rng);
  g.w_h = make_param(prefix + ".w_h", gate_rows, hidden, rng);
  g.b_z = make_param(prefix + ".b_z", 1, hidden, rng, gate_rows);
  g.b_r = make_param(prefix + ".b_r", 1, hidden, rng, gate_rows);
  g.b_h = make_param(prefix + ".b_h", 1, hidden, rng, gate_rows);
  g.b_z.value.setZero();
  g.b_r.value.setZero();
  g.b_h.value.setZero();
  if (output_dim > 0)
    g.w_o = make_param(prefix + ".w_o", hidden, output_dim, rng);
  return g;
}

namespace {

Value apply_activation(Value v, Activation activation) {
  switch (activation) {
    case Activation::kLinear:
      return v;
    case Activation::kRelu:
      return relu(v);
  }
  return v;
}

}  // namespace

Value graph_conv(Value scaled_lap, Value x, Value theta, int cheb_k,
                 Activation activation) {
  std::vector<Value> terms = cheb_polynomials(scaled_lap, x, cheb_k);
  if (theta.rows() != cheb_k * x.cols())
    throw ShapeError("graph_conv: theta " + shape_str(theta.data()) +
                     " does not match " + std::to_string(cheb_k) +
                     " terms of width " + std::to_string(x.cols()));
  Value stacked = terms[0];
  for (int k = 1; k < cheb_k; ++k) stacked = concat_cols(stacked, terms[k]);
  return apply_activation(matmul(stacked, theta), activation);
}

Value graph_conv_dense(Value op, Value x, Value theta, Activation activation) {
  if (op.cols() != x.rows())
    throw ShapeError("graph_conv_dense: operator " + shape_str(op.data()) +
                     " does not match input " + shape_str(x.data()));
  return apply_activation(matmul(matmul(op, x), theta), activation);
}

Value compute_assignment(Value op, Value x_static, Value assign_weights) {
  return row_softmax(
      graph_conv_dense(op, x_static, assign_weights, Activation::kRelu));
}

std::pair<Value, Value> pool(Value a, Value x, Value assignment) {
  if (a.rows() != assignment.rows() || x.rows() != assignment.rows())
    throw ShapeError("pool: assignment " + shape_str(assignment.data()) +
                     " does not match adjacency " + shape_str(a.data()) +
                     " / features " + shape_str(x.data()));
  Value pt = transpose(assignment);
  Value a_pool = matmul(matmul(pt, a), assignment);
  Value x_pool = matmul(pt, x);
  return {a_pool, x_pool};
}

Value unpool(Value x_pool, Value assignment) {
  if (assignment.cols() != x_pool.rows())
    throw ShapeError("unpool: assignment " + shape_str(assignment.data()) +
                     " does not match pooled features " +
                     shape_str(x_pool.data()));
  return matmul(assignment, x_pool);
}

Value gru_step(Value h_prev, Value x_in, const GruGates& gates) {
  if (h_prev.rows() != x_in.rows())
    throw ShapeError("gru_step: state " + shape_str(h_prev.data()) +
                     " and input " + shape_str(x_in.data()) +
                     " have different node counts");
  Value cat = concat_cols(h_prev, x_in);
  Value z = sigmoid(add_rowvec(matmul(cat, gates.w_z), gates.b_z));
  Value r = sigmoid(add_rowvec(matmul(cat, gates.w_r), gates.b_r));
  Value cat_r = concat_cols(hadamard(r, h_prev), x_in);
  Value h_cand = tanh_act(add_rowvec(matmul(cat_r, gates.w_h), gates.b_h));
  Value keep = affine(z, -1.0, 1.0);  // 1 − z
  return add(hadamard(keep, h_prev), hadamard(z, h_cand));
}

Value output_proj(Value h, Value w_o) {
  if (h.cols() != w_o.rows())
    throw ShapeError("output_proj: state " + shape_str(h.data()) +
                     " does not match projection " + shape_str(w_o.data()));
  return matmul(h, w_o);
}

}  // namespace stgraph
