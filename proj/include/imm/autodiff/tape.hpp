#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "imm/autodiff/tensor.hpp"

namespace imm::ad {

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;

  Tape* tape() const noexcept { return tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Append-only record of executed ops for reverse-mode differentiation.
///
/// Nodes are stored in execution order, so every node's parents precede it
/// and a single reverse sweep visits each node once. Parameters enter the
/// tape as leaves bound to an external Tensor; backward() adds their
/// gradients into that tensor's grad buffer, so repeated calls accumulate.
///
/// A tape is confined to one thread. With recording disabled no backward
/// closures are kept, which is the fast path for inference.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(bool recording = true) : recording_(recording) { nodes_.reserve(512); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Leaf holding a copy of t; receives gradients but is not a parameter.
  Var constant(Tensor t);

  /// Leaf bound to a parameter. The same tensor maps to the same node.
  Var parameter(Tensor& p);

  const Tensor& value(Var v) const;
  const Tensor& value(std::uint32_t id) const;

  /// Gradient of the last backward() sweep w.r.t. any node; empty if the
  /// node did not influence the loss.
  std::span<const double> grad(Var v) const;

  /// Reverse sweep from a scalar loss. Throws StructuralError when the loss
  /// lives on another tape or is not a scalar, or when recording is off.
  void backward(Var loss, double seed = 1.0);

  // Op authoring interface.
  Var push(Tensor value, Backward backward);
  /// Gradient buffer of a node, allocated (zeroed) on first use.
  std::span<double> grad_buffer(std::uint32_t id);
  /// Gradient of a node during backward; empty if nothing flowed into it.
  std::span<const double> incoming(std::uint32_t id) const;

 private:
  struct Node {
    Tensor value;
    Tensor* external = nullptr;
    std::vector<double> grad;
    Backward backward;
  };

  bool recording_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> parameter_nodes_;
};

}  // namespace imm::ad
