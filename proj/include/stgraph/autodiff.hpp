#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stgraph/errors.hpp"

namespace stgraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

// Handle to one node of a Tape. Cheap to copy; valid while the tape lives.
class Value {
 public:
  Value() = default;

  int rows() const;
  int cols() const;
  const Matrix& data() const;
  // Accumulated gradient; materialized as zeros on first access.
  const Matrix& grad() const;
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Value(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode computation record over dense double matrices.
//
// Nodes are appended in creation order, so every parent precedes its
// children and a single reverse sweep visits each node exactly once.
// A tape and its values are confined to one thread; independent tapes
// are independent.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf creation. Constants never receive gradients.
  Value leaf(Matrix data, bool requires_grad = true);
  Value constant(Matrix data) { return leaf(std::move(data), false); }
  Value zeros(int rows, int cols) { return constant(Matrix::Zero(rows, cols)); }

  // Dense product a·b. Backward: g·bᵀ into a, aᵀ·g into b.
  Value matmul(Value a, Value b);

  // Elementwise operations (equal shapes; no implicit broadcasting).
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value hadamard(Value a, Value b);
  // alpha·x + beta, elementwise.
  Value affine(Value a, double alpha, double beta);
  Value scale(Value a, double alpha) { return affine(a, alpha, 0.0); }
  Value sigmoid(Value a);
  Value tanh(Value a);
  Value relu(Value a);

  // Columns of a followed by columns of b; rows must match.
  Value concat_cols(Value a, Value b);
  // Row-wise softmax with per-row max subtraction.
  Value row_softmax(Value a);
  Value transpose(Value a);
  // a (n×m) plus row vector b (1×m) added to every row.
  Value add_rowvec(Value a, Value b);
  // Sum of all entries as a 1×1 value.
  Value sum(Value a);

  // Accumulates d(loss)/d(node) into the grad buffer of every node that
  // requires a gradient. loss must be a 1×1 value of this tape. Repeated
  // calls without zero_grad() accumulate.
  void backward(Value loss);
  void zero_grad();

  std::size_t node_count() const { return nodes_.size(); }
  // Total doubles held in node data buffers (activation footprint).
  std::size_t data_floats() const;

 private:
  friend class Value;

  enum class Op : std::uint8_t {
    kLeaf,
    kMatMul,
    kAdd,
    kSub,
    kHadamard,
    kAffine,
    kSigmoid,
    kTanh,
    kRelu,
    kConcatCols,
    kRowSoftmax,
    kTranspose,
    kAddRowVec,
    kSum,
  };

  struct Node {
    Matrix data;
    Matrix grad;  // lazily sized; empty means all-zero
    Op op = Op::kLeaf;
    int a = -1;
    int b = -1;
    double alpha = 0.0;
    double beta = 0.0;
    bool requires_grad = false;
  };

  Value push(Node node);
  const Node& node(int id) const { return nodes_[id]; }
  Matrix& grad_buffer(int id);
  void check_same_tape(Value v, const char* op) const;

  std::vector<Node> nodes_;
};

// Free-function aliases so expressions read like math.
Value matmul(Value a, Value b);
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value hadamard(Value a, Value b);
Value affine(Value a, double alpha, double beta);
Value scale(Value a, double alpha);
Value sigmoid(Value a);
Value tanh_act(Value a);
Value relu(Value a);
Value concat_cols(Value a, Value b);
Value row_softmax(Value a);
Value transpose(Value a);
Value add_rowvec(Value a, Value b);
Value sum(Value a);

std::string shape_str(const Matrix& m);
std::string shape_str(int rows, int cols);

}  // namespace stgraph
