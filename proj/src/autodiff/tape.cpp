#include "imm/autodiff/tape.hpp"

#include <algorithm>

#include "imm/error.hpp"

namespace imm::ad {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw StructuralError("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::constant(Tensor t) { return push(std::move(t), nullptr); }

Var Tape::parameter(Tensor& p) {
  if (auto it = parameter_nodes_.find(&p); it != parameter_nodes_.end()) {
    return Var(this, it->second);
  }
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  Node node;
  node.external = &p;
  nodes_.push_back(std::move(node));
  parameter_nodes_.emplace(&p, id);
  return Var(this, id);
}

const Tensor& Tape::value(Var v) const {
  if (v.tape_ != this) throw StructuralError("Var belongs to a different tape");
  return value(v.id_);
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& node = nodes_[id];
  return node.external != nullptr ? *node.external : node.value;
}

std::span<const double> Tape::grad(Var v) const {
  if (v.tape_ != this) throw StructuralError("Var belongs to a different tape");
  return nodes_[v.id_].grad;
}

Var Tape::push(Tensor value, Backward backward) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  Node node;
  node.value = std::move(value);
  if (recording_) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, id);
}

std::span<double> Tape::grad_buffer(std::uint32_t id) {
  Node& node = nodes_[id];
  const std::size_t n = value(id).size();
  if (node.grad.size() != n) node.grad.assign(n, 0.0);
  return node.grad;
}

std::span<const double> Tape::incoming(std::uint32_t id) const { return nodes_[id].grad; }

void Tape::backward(Var loss, double seed) {
  if (loss.tape_ != this) throw StructuralError("loss was not produced on this tape");
  if (!recording_) throw StructuralError("backward on a tape with recording disabled");
  if (value(loss).size() != 1) {
    throw StructuralError("loss must be a scalar, got shape " + shape_string(value(loss).shape()));
  }
  for (Node& node : nodes_) node.grad.clear();
  grad_buffer(loss.id_)[0] = seed;
  for (std::uint32_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.empty()) continue;
    if (node.backward) node.backward(*this, id);
    if (node.external != nullptr) {
      Tensor& p = *node.external;
      p.ensure_grad();
      auto g = p.grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    }
  }
}

}  // namespace imm::ad
