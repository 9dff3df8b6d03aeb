#include "imm/data/normalize.hpp"

#include <cmath>

#include "imm/error.hpp"

namespace imm::data {

Normalizer fit_normalizer(std::span<const double> values, std::string* warning) {
  if (values.empty()) throw DomainError("cannot fit a normalizer on an empty training set");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  Normalizer n{mean, std::sqrt(var)};
  if (!(n.scale > 0.0)) {
    n.scale = 1.0;
    if (warning != nullptr) *warning = "training values have zero variance; using unit scale";
  }
  return n;
}

void normalize_windows(const Normalizer& norm, std::vector<WindowSample>& windows) {
  for (auto& w : windows) {
    for (double& v : w.x) v = norm.apply(v);
    for (double& v : w.y) v = norm.apply(v);
  }
}

}  // namespace imm::data
