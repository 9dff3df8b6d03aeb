#include <algorithm>

#include "imm/data/cgm.hpp"
#include "imm/random.hpp"

namespace imm::data {

Partition partition(std::vector<Segment> segments, std::uint64_t seed) {
  std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    return a.subject_id != b.subject_id ? a.subject_id < b.subject_id : a.start < b.start;
  });
  Partition out;
  const std::size_t n = segments.size();
  if (n < 22) {
    out.warning = "only " + std::to_string(n) +
                  " segments (need 22 for a 20:1:1 split); all assigned to train";
    out.train = std::move(segments);
    return out;
  }
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(segments[i - 1], segments[rng.below(i)]);
  }
  const std::size_t n_holdout = n / 22;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_holdout ? out.val : (i < 2 * n_holdout ? out.test : out.train);
    dst.push_back(std::move(segments[i]));
  }
  return out;
}

}  // namespace imm::data
