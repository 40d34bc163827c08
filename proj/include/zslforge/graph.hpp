#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zslforge/errors.hpp"
#include "zslforge/rng.hpp"

namespace zslforge {

// Reverse-mode tape over dense matrices. Every primitive's backward rule is
// itself built from these primitives and appended to the same tape, so the
// gradient of a recorded scalar is again a recorded value and can be
// differentiated once more. That second pass is what the parameter gradient
// of an input-gradient norm requires.

enum class Op : std::uint8_t {
  kInput,
  kAdd,
  kSub,
  kNeg,
  kMulElem,
  kDivElem,
  kMatMul,
  kTranspose,
  kScalarMul,
  kScalarAdd,
  kLeakyRelu,  // scalar parameter = negative slope; 0 gives the rectifier
  kAbs,
  kSquare,
  kSqrt,
  kExp,
  kLog,
  kSumAll,
  kRowSum,
  kColSum,
  kBroadcastCols,  // (n x 1) -> (n x p0)
  kBroadcastRows,  // (1 x m) -> (p0 x m)
  kBroadcast11,    // (1 x 1) -> (p0 x p1)
  kConcatCols,
  kSliceCols,  // columns [p0, p0 + p1)
  kPadCols,    // p0 zero columns on the left, p1 on the right
};

template <typename Scalar>
class GraphT;

template <typename Scalar>
class VarT {
 public:
  VarT() = default;
  VarT(GraphT<Scalar>* graph, int id) : graph_(graph), id_(id) {}

  bool valid() const { return graph_ != nullptr && id_ >= 0; }
  int id() const { return id_; }
  GraphT<Scalar>* graph() const { return graph_; }
  const Mat<Scalar>& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  GraphT<Scalar>* graph_ = nullptr;
  int id_ = -1;
};

template <typename Scalar>
class GraphT {
 public:
  using Var = VarT<Scalar>;
  using M = Mat<Scalar>;

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    Scalar s = Scalar(0);
    int p0 = 0;
    int p1 = 0;
    M value;
  };

  GraphT() { nodes_.reserve(256); }
  GraphT(const GraphT&) = delete;
  GraphT& operator=(const GraphT&) = delete;

  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  const M& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }

  /// Records a leaf holding the given value.
  Var input(const M& value) { return emit(Op::kInput, -1, -1, value); }
  /// Alias of input(); used where the value is semantically a detached
  /// constant rather than a differentiation target.
  Var constant(const M& value) { return input(value); }
  Var constant_scalar(Scalar v) {
    M m(1, 1);
    m(0, 0) = v;
    return input(m);
  }

  /// Recomputes every node value in recording order. Leaf values are kept.
  void replay() {
    for (auto& n : nodes_) {
      if (n.op == Op::kInput) continue;
      n.value = eval(n);
    }
  }

  /// Reverse-mode gradients of a recorded scalar with respect to the given
  /// leaves. The backward computation is appended to the tape, so the
  /// returned vars can be differentiated again. Leaves that do not influence
  /// the scalar get zero gradients.
  std::vector<Var> grad_vars(Var scalar, std::span<const Var> leaves) {
    check_owned(scalar, "grad: scalar");
    if (scalar.rows() != 1 || scalar.cols() != 1)
      throw InvalidArgument("grad: root must be a recorded 1x1 scalar");
    for (const Var& leaf : leaves) check_owned(leaf, "grad: leaf");

    std::vector<int> adjoint = backward(scalar.id());
    std::vector<Var> out;
    out.reserve(leaves.size());
    for (const Var& leaf : leaves) {
      const int a = adjoint[static_cast<size_t>(leaf.id())];
      if (a >= 0) {
        out.emplace_back(this, a);
      } else {
        out.push_back(constant(M::Zero(leaf.rows(), leaf.cols())));
      }
    }
    return out;
  }

  std::vector<M> gradients(Var scalar, std::span<const Var> leaves) {
    auto vars = grad_vars(scalar, leaves);
    std::vector<M> out;
    out.reserve(vars.size());
    for (const Var& v : vars) out.push_back(v.value());
    return out;
  }

  /// Per-row gradient of a row-wise network output with respect to one of
  /// its input leaves. `output` is the (n x 1) column of scores (a 1 x 1
  /// scalar is also accepted). The result is recorded, hence further
  /// differentiable.
  Var input_gradient(Var output, Var input_leaf) {
    check_owned(output, "input_gradient: output");
    if (output.cols() != 1)
      throw InvalidArgument("input_gradient: output must be a column");
    if (!input_leaf.valid() || input_leaf.graph() != this ||
        input_leaf.id() >= size())
      throw UnrecordedLeaf("input_gradient: input is not recorded on this tape");
    Var root = output.rows() == 1 ? output : sum_all(output);
    std::vector<int> adjoint = backward(root.id());
    const int a = adjoint[static_cast<size_t>(input_leaf.id())];
    if (a >= 0) return Var(this, a);
    return constant(M::Zero(input_leaf.rows(), input_leaf.cols()));
  }

  // ---- primitive emitters ----

  Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    return emit(Op::kAdd, a.id(), b.id());
  }
  Var sub(Var a, Var b) {
    require_same_shape(a, b, "sub");
    return emit(Op::kSub, a.id(), b.id());
  }
  Var neg(Var a) { return emit(Op::kNeg, a.id()); }
  Var mul_elem(Var a, Var b) {
    require_same_shape(a, b, "mul_elem");
    return emit(Op::kMulElem, a.id(), b.id());
  }
  Var div_elem(Var a, Var b) {
    require_same_shape(a, b, "div_elem");
    return emit(Op::kDivElem, a.id(), b.id());
  }
  Var matmul(Var a, Var b) {
    if (a.cols() != b.rows())
      throw ShapeMismatch("matmul: inner dimensions " +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()));
    return emit(Op::kMatMul, a.id(), b.id());
  }
  Var transpose(Var a) { return emit(Op::kTranspose, a.id()); }
  Var scalar_mul(Var a, Scalar s) {
    return emit(Op::kScalarMul, a.id(), -1, {}, s);
  }
  Var scalar_add(Var a, Scalar s) {
    return emit(Op::kScalarAdd, a.id(), -1, {}, s);
  }
  Var leaky_relu(Var a, Scalar slope) {
    return emit(Op::kLeakyRelu, a.id(), -1, {}, slope);
  }
  Var relu(Var a) { return leaky_relu(a, Scalar(0)); }
  Var abs(Var a) { return emit(Op::kAbs, a.id()); }
  Var square(Var a) { return emit(Op::kSquare, a.id()); }
  Var sqrt(Var a) { return emit(Op::kSqrt, a.id()); }
  Var exp(Var a) { return emit(Op::kExp, a.id()); }
  Var log(Var a) { return emit(Op::kLog, a.id()); }
  Var sum_all(Var a) { return emit(Op::kSumAll, a.id()); }
  Var mean_all(Var a) {
    return scalar_mul(sum_all(a), Scalar(1) / Scalar(a.rows() * a.cols()));
  }
  Var row_sum(Var a) { return emit(Op::kRowSum, a.id()); }
  Var col_sum(Var a) { return emit(Op::kColSum, a.id()); }
  Var broadcast_cols(Var a, int cols) {
    if (a.cols() != 1) throw ShapeMismatch("broadcast_cols: need a column");
    return emit(Op::kBroadcastCols, a.id(), -1, {}, Scalar(0), cols);
  }
  Var broadcast_rows(Var a, int rows) {
    if (a.rows() != 1) throw ShapeMismatch("broadcast_rows: need a row");
    return emit(Op::kBroadcastRows, a.id(), -1, {}, Scalar(0), rows);
  }
  Var broadcast11(Var a, int rows, int cols) {
    if (a.rows() != 1 || a.cols() != 1)
      throw ShapeMismatch("broadcast11: need a 1x1");
    return emit(Op::kBroadcast11, a.id(), -1, {}, Scalar(0), rows, cols);
  }
  Var concat_cols(Var a, Var b) {
    if (a.rows() != b.rows())
      throw ShapeMismatch("concat_cols: row counts differ");
    return emit(Op::kConcatCols, a.id(), b.id());
  }
  Var slice_cols(Var a, int start, int len) {
    if (start < 0 || len < 0 || start + len > a.cols())
      throw ShapeMismatch("slice_cols: range out of bounds");
    return emit(Op::kSliceCols, a.id(), -1, {}, Scalar(0), start, len);
  }
  Var pad_cols(Var a, int left, int right) {
    if (left < 0 || right < 0) throw ShapeMismatch("pad_cols: negative pad");
    return emit(Op::kPadCols, a.id(), -1, {}, Scalar(0), left, right);
  }

  /// Row-broadcast add of a (1 x m) bias onto an (n x m) matrix.
  Var add_row_vector(Var a, Var bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols())
      throw ShapeMismatch("add_row_vector: bias must be 1 x cols(a)");
    return add(a, broadcast_rows(bias, static_cast<int>(a.rows())));
  }

 private:
  friend class VarT<Scalar>;
  std::vector<Node> nodes_;

  void check_owned(const Var& v, const char* what) const {
    if (!v.valid() || v.graph() != this || v.id() >= size())
      throw UnrecordedLeaf(std::string(what) +
                           " is not recorded on this tape");
  }

  static void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ShapeMismatch(std::string(op) + ": shapes " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }

  Var emit(Op op, int a, int b = -1, M value = {}, Scalar s = Scalar(0),
           int p0 = 0, int p1 = 0) {
    Node n{op, a, b, s, p0, p1, std::move(value)};
    if (op != Op::kInput) n.value = eval(n);
    nodes_.push_back(std::move(n));
    return Var(this, size() - 1);
  }

  M eval(const Node& n) const {
    const auto& A = nodes_[static_cast<size_t>(n.a)].value;
    switch (n.op) {
      case Op::kInput:
        return n.value;
      case Op::kAdd:
        return A + nodes_[static_cast<size_t>(n.b)].value;
      case Op::kSub:
        return A - nodes_[static_cast<size_t>(n.b)].value;
      case Op::kNeg:
        return -A;
      case Op::kMulElem:
        return A.cwiseProduct(nodes_[static_cast<size_t>(n.b)].value);
      case Op::kDivElem:
        return A.cwiseQuotient(nodes_[static_cast<size_t>(n.b)].value);
      case Op::kMatMul:
        return A * nodes_[static_cast<size_t>(n.b)].value;
      case Op::kTranspose:
        return A.transpose();
      case Op::kScalarMul:
        return A * n.s;
      case Op::kScalarAdd:
        return A.array() + n.s;
      case Op::kLeakyRelu: {
        const Scalar slope = n.s;
        return A.unaryExpr(
            [slope](Scalar x) { return x > Scalar(0) ? x : slope * x; });
      }
      case Op::kAbs:
        return A.cwiseAbs();
      case Op::kSquare:
        return A.cwiseProduct(A);
      case Op::kSqrt:
        return A.cwiseSqrt();
      case Op::kExp:
        return A.array().exp();
      case Op::kLog:
        return A.array().log();
      case Op::kSumAll: {
        M out(1, 1);
        out(0, 0) = A.sum();
        return out;
      }
      case Op::kRowSum:
        return A.rowwise().sum();
      case Op::kColSum:
        return A.colwise().sum();
      case Op::kBroadcastCols:
        return A.replicate(1, n.p0);
      case Op::kBroadcastRows:
        return A.replicate(n.p0, 1);
      case Op::kBroadcast11:
        return M::Constant(n.p0, n.p1, A(0, 0));
      case Op::kConcatCols: {
        const auto& B = nodes_[static_cast<size_t>(n.b)].value;
        M out(A.rows(), A.cols() + B.cols());
        out.leftCols(A.cols()) = A;
        out.rightCols(B.cols()) = B;
        return out;
      }
      case Op::kSliceCols:
        return A.middleCols(n.p0, n.p1);
      case Op::kPadCols: {
        M out = M::Zero(A.rows(), n.p0 + A.cols() + n.p1);
        out.middleCols(n.p0, A.cols()) = A;
        return out;
      }
    }
    throw Error("graph: unreachable op");
  }

  // Emits adjoint nodes for every recorded node that the root depends on.
  // Returns adjoint node id per original node id (-1 where none).
  std::vector<int> backward(int root) {
    const size_t n_orig = nodes_.size();
    std::vector<bool> reachable(n_orig, false);
    reachable[static_cast<size_t>(root)] = true;
    for (int i = root; i >= 0; --i) {
      if (!reachable[static_cast<size_t>(i)]) continue;
      const Node& n = nodes_[static_cast<size_t>(i)];
      if (n.a >= 0) reachable[static_cast<size_t>(n.a)] = true;
      if (n.b >= 0) reachable[static_cast<size_t>(n.b)] = true;
    }

    std::vector<int> adjoint(n_orig, -1);
    adjoint[static_cast<size_t>(root)] =
        constant(M::Ones(1, 1)).id();

    auto accumulate = [&](int target, Var contribution) {
      int& slot = adjoint[static_cast<size_t>(target)];
      slot = slot < 0 ? contribution.id()
                      : add(Var(this, slot), contribution).id();
    };

    for (int i = root; i >= 0; --i) {
      if (!reachable[static_cast<size_t>(i)] ||
          adjoint[static_cast<size_t>(i)] < 0)
        continue;
      const Node n = nodes_[static_cast<size_t>(i)];  // copy: vector may grow
      const Var g(this, adjoint[static_cast<size_t>(i)]);
      const Var self(this, i);
      const Var va(this, n.a);

      switch (n.op) {
        case Op::kInput:
          break;
        case Op::kAdd:
          accumulate(n.a, g);
          accumulate(n.b, g);
          break;
        case Op::kSub:
          accumulate(n.a, g);
          accumulate(n.b, neg(g));
          break;
        case Op::kNeg:
          accumulate(n.a, neg(g));
          break;
        case Op::kMulElem:
          accumulate(n.a, mul_elem(g, Var(this, n.b)));
          accumulate(n.b, mul_elem(g, va));
          break;
        case Op::kDivElem: {
          const Var vb(this, n.b);
          const Var ga = div_elem(g, vb);
          accumulate(n.a, ga);
          accumulate(n.b, neg(mul_elem(ga, self)));
          break;
        }
        case Op::kMatMul:
          accumulate(n.a, matmul(g, transpose(Var(this, n.b))));
          accumulate(n.b, matmul(transpose(va), g));
          break;
        case Op::kTranspose:
          accumulate(n.a, transpose(g));
          break;
        case Op::kScalarMul:
          accumulate(n.a, scalar_mul(g, n.s));
          break;
        case Op::kScalarAdd:
          accumulate(n.a, g);
          break;
        case Op::kLeakyRelu: {
          // Almost-everywhere derivative; the mask is a constant of the
          // recorded forward values.
          const Scalar slope = n.s;
          M mask = va.value().unaryExpr([slope](Scalar x) {
            return x > Scalar(0) ? Scalar(1) : slope;
          });
          accumulate(n.a, mul_elem(g, constant(mask)));
          break;
        }
        case Op::kAbs: {
          M sgn = va.value().unaryExpr([](Scalar x) {
            return x > Scalar(0) ? Scalar(1)
                                 : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
          });
          accumulate(n.a, mul_elem(g, constant(sgn)));
          break;
        }
        case Op::kSquare:
          accumulate(n.a, scalar_mul(mul_elem(g, va), Scalar(2)));
          break;
        case Op::kSqrt:
          accumulate(n.a, div_elem(g, scalar_mul(self, Scalar(2))));
          break;
        case Op::kExp:
          accumulate(n.a, mul_elem(g, self));
          break;
        case Op::kLog:
          accumulate(n.a, div_elem(g, va));
          break;
        case Op::kSumAll:
          accumulate(n.a, broadcast11(g, static_cast<int>(va.rows()),
                                      static_cast<int>(va.cols())));
          break;
        case Op::kRowSum:
          accumulate(n.a, broadcast_cols(g, static_cast<int>(va.cols())));
          break;
        case Op::kColSum:
          accumulate(n.a, broadcast_rows(g, static_cast<int>(va.rows())));
          break;
        case Op::kBroadcastCols:
          accumulate(n.a, row_sum(g));
          break;
        case Op::kBroadcastRows:
          accumulate(n.a, col_sum(g));
          break;
        case Op::kBroadcast11:
          accumulate(n.a, sum_all(g));
          break;
        case Op::kConcatCols:
          accumulate(n.a, slice_cols(g, 0, static_cast<int>(va.cols())));
          accumulate(n.b,
                     slice_cols(g, static_cast<int>(va.cols()),
                                static_cast<int>(Var(this, n.b).cols())));
          break;
        case Op::kSliceCols:
          accumulate(n.a, pad_cols(g, n.p0,
                                   static_cast<int>(va.cols()) - n.p0 - n.p1));
          break;
        case Op::kPadCols:
          accumulate(n.a, slice_cols(g, n.p0, static_cast<int>(va.cols())));
          break;
      }
    }
    return adjoint;
  }
};

template <typename Scalar>
const Mat<Scalar>& VarT<Scalar>::value() const {
  if (!valid()) throw UnrecordedLeaf("Var: empty handle");
  return graph_->value(id_);
}

using Graph = GraphT<double>;
using Var = VarT<double>;

/// Convenience: gradients of a recorded scalar as plain matrices.
template <typename Scalar>
std::vector<Mat<Scalar>> grad(GraphT<Scalar>& tape, VarT<Scalar> scalar,
                              std::span<const VarT<Scalar>> leaves) {
  return tape.gradients(scalar, leaves);
}

template <typename Scalar>
VarT<Scalar> input_gradient(GraphT<Scalar>& tape, VarT<Scalar> output,
                            VarT<Scalar> input_leaf) {
  return tape.input_gradient(output, input_leaf);
}

}  // namespace zslforge
