#include "stgraph/autodiff.hpp"

#include <cmath>
#include <utility>

namespace stgraph {

std::string shape_str(int rows, int cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

std::string shape_str(const Matrix& m) {
  return shape_str(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
}

int Value::rows() const { return static_cast<int>(data().rows()); }
int Value::cols() const { return static_cast<int>(data().cols()); }

const Matrix& Value::data() const { return tape_->node(id_).data; }

const Matrix& Value::grad() const { return tape_->grad_buffer(id_); }

bool Value::requires_grad() const { return tape_->node(id_).requires_grad; }

Value Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.data.rows(), n.data.cols());
  return n.grad;
}

void Tape::check_same_tape(Value v, const char* op) const {
  if (!v.valid() || v.tape_ != this)
    throw ContractError(std::string(op) + ": value does not belong to this tape");
}

Value Tape::leaf(Matrix data, bool requires_grad) {
  Node n;
  n.data = std::move(data);
  n.op = Op::kLeaf;
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
  check_same_tape(a, "matmul");
  check_same_tape(b, "matmul");
  const Node& na = node(a.id_);
  const Node& nb = node(b.id_);
  if (na.data.cols() != nb.data.rows())
    throw ShapeError("matmul: inner dimensions differ (" + shape_str(na.data) +
                     " vs " + shape_str(nb.data) + ")");
  Node n;
  n.data = na.data * nb.data;
  n.op = Op::kMatMul;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

namespace {

void require_equal_shape(const Matrix& x, const Matrix& y, const char* op) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ShapeError(std::string(op) + ": shape mismatch (" + shape_str(x) +
                     " vs " + shape_str(y) + ")");
}

}  // namespace

Value Tape::add(Value a, Value b) {
  check_same_tape(a, "add");
  check_same_tape(b, "add");
  const Node& na = node(a.id_);
  const Node& nb = node(b.id_);
  require_equal_shape(na.data, nb.data, "add");
  Node n;
  n.data = na.data + nb.data;
  n.op = Op::kAdd;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
  check_same_tape(a, "sub");
  check_same_tape(b, "sub");
  const Node& na = node(a.id_);
  const Node& nb = node(b.id_);
  require_equal_shape(na.data, nb.data, "sub");
  Node n;
  n.data = na.data - nb.data;
  n.op = Op::kSub;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Value Tape::hadamard(Value a, Value b) {
  check_same_tape(a, "hadamard");
  check_same_tape(b, "hadamard");
  const Node& na = node(a.id_);
  const Node& nb = node(b.id_);
  require_equal_shape(na.data, nb.data, "hadamard");
  Node n;
  n.data = na.data.cwiseProduct(nb.data);
  n.op = Op::kHadamard;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Value Tape::affine(Value a, double alpha, double beta) {
  check_same_tape(a, "affine");
  const Node& na = node(a.id_);
  Node n;
  n.data = (alpha * na.data).array() + beta;
  n.op = Op::kAffine;
  n.a = a.id_;
  n.alpha = alpha;
  n.beta = beta;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Value Tape::sigmoid(Value a) {
  check_same_tape(a, "sigmoid");
  const Node& na = node(a.id_);
  Node n;
  n.data = na.data.unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  n.op = Op::kSigmoid;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Value Tape::tanh(Value a) {
  check_same_tape(a, "tanh");
  const Node& na = node(a.id_);
  Node n;
  n.data = na.data.unaryExpr([](double x) { return std::tanh(x); });
  n.op = Op::kTanh;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Value Tape::relu(Value a) {
  check_same_tape(a, "relu");
  const Node& na = node(a.id_);
  Node n;
  n.data = na.data.cwiseMax(0.0);
  n.op = Op::kRelu;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Value Tape::concat_cols(Value a, Value b) {
  check_same_tape(a, "concat_cols");
  check_same_tape(b, "concat_cols");
  const Node& na = node(a.id_);
  const Node& nb = node(b.id_);
  if (na.data.rows() != nb.data.rows())
    throw ShapeError("concat_cols: row counts differ (" + shape_str(na.data) +
                     " vs " + shape_str(nb.data) + ")");
  Node n;
  n.data.resize(na.data.rows(), na.data.cols() + nb.data.cols());
  n.data.leftCols(na.data.cols()) = na.data;
  n.data.rightCols(nb.data.cols()) = nb.data;
  n.op = Op::kConcatCols;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Value Tape::row_softmax(Value a) {
  check_same_tape(a, "row_softmax");
  const Node& na = node(a.id_);
  if (na.data.hasNaN()) throw NumericError("row_softmax: input contains NaN");
  Node n;
  n.data.resize(na.data.rows(), na.data.cols());
  for (Eigen::Index i = 0; i < na.data.rows(); ++i) {
    const double m = na.data.row(i).maxCoeff();
    Eigen::RowVectorXd e = (na.data.row(i).array() - m).exp();
    n.data.row(i) = e / e.sum();
  }
  n.op = Op::kRowSoftmax;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Value Tape::transpose(Value a) {
  check_same_tape(a, "transpose");
  const Node& na = node(a.id_);
  Node n;
  n.data = na.data.transpose();
  n.op = Op::kTranspose;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

Value Tape::add_rowvec(Value a, Value b) {
  check_same_tape(a, "add_rowvec");
  check_same_tape(b, "add_rowvec");
  const Node& na = node(a.id_);
  const Node& nb = node(b.id_);
  if (nb.data.rows() != 1 || nb.data.cols() != na.data.cols())
    throw ShapeError("add_rowvec: expected 1x" +
                     std::to_string(na.data.cols()) + " row vector, got " +
                     shape_str(nb.data));
  Node n;
  n.data = na.data.rowwise() + nb.data.row(0);
  n.op = Op::kAddRowVec;
  n.a = a.id_;
  n.b = b.id_;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

Value Tape::sum(Value a) {
  check_same_tape(a, "sum");
  const Node& na = node(a.id_);
  Node n;
  n.data = Matrix::Constant(1, 1, na.data.sum());
  n.op = Op::kSum;
  n.a = a.id_;
  n.requires_grad = na.requires_grad;
  return push(std::move(n));
}

void Tape::backward(Value loss) {
  check_same_tape(loss, "backward");
  const Node& root = node(loss.id_);
  if (root.data.rows() != 1 || root.data.cols() != 1)
    throw ContractError("backward: loss must be 1x1, got " +
                        shape_str(root.data));

  // Adjoints are kept separate from persistent grads so repeated backward
  // calls accumulate independent passes.
  std::vector<Matrix> adj(nodes_.size());
  adj[loss.id_] = Matrix::Ones(1, 1);

  for (int i = loss.id_; i >= 0; --i) {
    if (adj[i].size() == 0) continue;
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    const Matrix& g = adj[i];
    auto acc = [&](int pid, auto&& expr) {
      if (pid < 0 || !nodes_[pid].requires_grad) return;
      if (adj[pid].size() == 0)
        adj[pid] = Matrix::Zero(nodes_[pid].data.rows(), nodes_[pid].data.cols());
      adj[pid] += expr;
    };
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul:
        acc(n.a, g * nodes_[n.b].data.transpose());
        acc(n.b, nodes_[n.a].data.transpose() * g);
        break;
      case Op::kAdd:
        acc(n.a, g);
        acc(n.b, g);
        break;
      case Op::kSub:
        acc(n.a, g);
        acc(n.b, -g);
        break;
      case Op::kHadamard:
        acc(n.a, g.cwiseProduct(nodes_[n.b].data));
        acc(n.b, g.cwiseProduct(nodes_[n.a].data));
        break;
      case Op::kAffine:
        acc(n.a, n.alpha * g);
        break;
      case Op::kSigmoid:
        acc(n.a, g.cwiseProduct(n.data.cwiseProduct(
                     (1.0 - n.data.array()).matrix())));
        break;
      case Op::kTanh:
        acc(n.a, g.cwiseProduct((1.0 - n.data.array().square()).matrix()));
        break;
      case Op::kRelu:
        acc(n.a, g.cwiseProduct((nodes_[n.a].data.array() > 0.0)
                                    .cast<double>()
                                    .matrix()));
        break;
      case Op::kConcatCols:
        acc(n.a, g.leftCols(nodes_[n.a].data.cols()));
        acc(n.b, g.rightCols(nodes_[n.b].data.cols()));
        break;
      case Op::kRowSoftmax: {
        // d/dx = y ⊙ (g − rowdot(g, y))
        Matrix gx(n.data.rows(), n.data.cols());
        for (Eigen::Index r = 0; r < n.data.rows(); ++r) {
          const double dot = g.row(r).dot(n.data.row(r));
          gx.row(r) =
              n.data.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
        }
        acc(n.a, gx);
        break;
      }
      case Op::kTranspose:
        acc(n.a, g.transpose());
        break;
      case Op::kAddRowVec:
        acc(n.a, g);
        acc(n.b, g.colwise().sum());
        break;
      case Op::kSum:
        acc(n.a, Matrix::Constant(nodes_[n.a].data.rows(),
                                  nodes_[n.a].data.cols(), g(0, 0)));
        break;
    }
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].requires_grad || adj[i].size() == 0) continue;
    grad_buffer(static_cast<int>(i)) += adj[i];
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
}

std::size_t Tape::data_floats() const {
  std::size_t total = 0;
  for (const Node& n : nodes_) total += static_cast<std::size_t>(n.data.size());
  return total;
}

Value matmul(Value a, Value b) { return a.tape().matmul(a, b); }
Value add(Value a, Value b) { return a.tape().add(a, b); }
Value sub(Value a, Value b) { return a.tape().sub(a, b); }
Value hadamard(Value a, Value b) { return a.tape().hadamard(a, b); }
Value affine(Value a, double alpha, double beta) {
  return a.tape().affine(a, alpha, beta);
}
Value scale(Value a, double alpha) { return a.tape().scale(a, alpha); }
Value sigmoid(Value a) { return a.tape().sigmoid(a); }
Value tanh_act(Value a) { return a.tape().tanh(a); }
Value relu(Value a) { return a.tape().relu(a); }
Value concat_cols(Value a, Value b) { return a.tape().concat_cols(a, b); }
Value row_softmax(Value a) { return a.tape().row_softmax(a); }
Value transpose(Value a) { return a.tape().transpose(a); }
Value add_rowvec(Value a, Value b) { return a.tape().add_rowvec(a, b); }
Value sum(Value a) { return a.tape().sum(a); }

}  // namespace stgraph
