#include "imm/model/params.hpp"

#include <algorithm>

#include "imm/error.hpp"

namespace imm::model {

ad::Tensor& ParameterStore::add(std::string name, ad::Tensor tensor) {
  if (index_.count(name) != 0) throw StructuralError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(tensor)});
  return entries_.back().tensor;
}

ad::Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter '" + name + "'");
  return entries_[it->second].tensor;
}

const ad::Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter '" + name + "'");
  return entries_[it->second].tensor;
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

std::vector<ad::Tensor*> ParameterStore::tensors() {
  std::vector<ad::Tensor*> out;
  out.reserve(entries_.size());
  for (auto& e : entries_) out.push_back(&e.tensor);
  return out;
}

void ParameterStore::zero_grads() {
  for (auto& e : entries_) {
    e.tensor.ensure_grad();
    e.tensor.zero_grad();
  }
}

bool ParameterStore::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Entry& e) { return e.tensor.all_finite(); });
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].name != b.entries_[i].name) return false;
    if (!(a.entries_[i].tensor == b.entries_[i].tensor)) return false;
  }
  return true;
}

}  // namespace imm::model
