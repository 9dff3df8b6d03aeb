#include <cmath>

#include "imm/data/cgm.hpp"

namespace imm::data {

std::vector<Segment> segment(const RawSeries& series, const SegmentOptions& options) {
  std::vector<Segment> out;
  const auto& r = series.readings;
  std::size_t begin = 0;
  auto flush = [&](std::size_t end) {
    if (end - begin >= options.min_length && end > begin) {
      Segment s;
      s.subject_id = series.subject_id;
      s.start = r[begin].timestamp;
      s.step = options.step;
      s.values.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) s.values.push_back(r[i].glucose);
      out.push_back(std::move(s));
    }
    begin = end;
  };
  for (std::size_t i = 1; i < r.size(); ++i) {
    const bool gap = r[i].timestamp - r[i - 1].timestamp != options.step;
    const bool jump = std::abs(r[i].glucose - r[i - 1].glucose) > options.max_jump;
    if (gap || jump) flush(i);
  }
  flush(r.size());
  return out;
}

}  // namespace imm::data
