#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "imm/autodiff/tensor.hpp"

namespace imm::model {

/// Ordered registry of named parameter tensors.
///
/// Tensors are never added after construction of a model, so references
/// handed to a Tape stay valid. Copies are deep.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    ad::Tensor tensor;
  };

  /// Throws StructuralError on a duplicate name.
  ad::Tensor& add(std::string name, ad::Tensor tensor);

  ad::Tensor& get(const std::string& name);
  const ad::Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;

  std::vector<ad::Tensor*> tensors();

  void zero_grads();
  bool all_finite() const;

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace imm::model
