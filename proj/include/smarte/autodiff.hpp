#pragma once

// Define-by-run reverse-mode differentiation over dense row-major matrices.
//
// Every tensor in the model is at most two-dimensional, so a Var wraps an
// Eigen matrix: scalars are 1x1, vectors are 1xn rows. A Tape records nodes in
// creation order, which is a topological order by construction; backward()
// walks it once in reverse.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smarte/errors.hpp"

namespace smarte {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using ColVector = Eigen::Matrix<double, Eigen::Dynamic, 1>;

enum class ParamGroup { encoder, decoder };

/// A named learnable tensor that outlives individual tapes.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value, ParamGroup group = ParamGroup::decoder)
      : name(std::move(name)), value(std::move(value)), group(group) {
    grad = Matrix::Zero(this->value.rows(), this->value.cols());
  }

  void zero_grad() { grad.setZero(); }

  std::string name;
  Matrix value;
  Matrix grad;
  ParamGroup group = ParamGroup::decoder;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that receives a gradient but is not bound to a Parameter.
  Var input(Matrix value);
  /// Leaf bound to `p`; repeated calls for the same parameter return one node.
  Var param(Parameter& p);

  /// Records a node. `fn` is dropped when none of `inputs` requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);

  /// Reverse sweep from a scalar. Parameter gradients accumulate into
  /// Parameter::grad; call Parameter::zero_grad() to reset.
  void backward(const Var& loss);
  /// Same sweep, but leaves parameter gradients on the tape (see param_grads()).
  void backward_local(const Var& loss);

  /// (parameter, gradient) for every parameter leaf after backward_local().
  std::vector<std::pair<Parameter*, const Matrix*>> param_grads() const;

  const Matrix& value(std::uint32_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::uint32_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

  /// grad(id) += delta, allocating the buffer on first use.
  template <typename Derived>
  void accumulate(std::uint32_t id, const Eigen::MatrixBase<Derived>& delta) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad += delta;
    }
  }

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  void sweep(const Var& loss);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_ids_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline const Matrix& Var::grad() const { return tape_->grad(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

/// Throws NumericError when any entry is NaN or infinite.
void check_finite(const Matrix& m, const char* where, int iteration = -1);

}  // namespace smarte
