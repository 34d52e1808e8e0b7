#include "smarte/autodiff.hpp"

#include <cmath>
#include <string>

namespace smarte {

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractError("scalar() on a non-scalar tensor");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_ids_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ContractError("operation mixes tensors from different tapes");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, nullptr, needs});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::sweep(const Var& loss) {
  if (loss.tape() != this) throw ContractError("backward on a tensor from another tape");
  if (nodes_[loss.id()].value.size() != 1) throw ContractError("backward requires a scalar loss");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::uint32_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

void Tape::backward(const Var& loss) {
  sweep(loss);
  for (Node& n : nodes_) {
    if (n.param != nullptr && n.grad.size() != 0) n.param->grad += n.grad;
  }
}

void Tape::backward_local(const Var& loss) { sweep(loss); }

std::vector<std::pair<Parameter*, const Matrix*>> Tape::param_grads() const {
  std::vector<std::pair<Parameter*, const Matrix*>> out;
  for (const Node& n : nodes_) {
    if (n.param != nullptr && n.grad.size() != 0) out.emplace_back(n.param, &n.grad);
  }
  return out;
}

void Tape::clear() {
  nodes_.clear();
  param_ids_.clear();
}

void check_finite(const Matrix& m, const char* where, int iteration) {
  if (!m.allFinite()) {
    std::string msg = std::string("non-finite value in ") + where;
    if (iteration >= 0) msg += " at iteration " + std::to_string(iteration);
    throw NumericError(msg, iteration);
  }
}

}  // namespace smarte
