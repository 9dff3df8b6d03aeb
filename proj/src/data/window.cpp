#include <chrono>

#include "imm/data/cgm.hpp"
#include "imm/error.hpp"

namespace imm::data {

std::array<double, 5> time_features(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds t{seconds{unix_seconds}};
  const sys_days day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss tod{t - day};
  const auto day_of_year = (day - sys_days{ymd.year() / January / 1}).count() + 1;
  const unsigned day_of_week = weekday{day}.iso_encoding() - 1;  // Monday = 0
  return {
      (static_cast<double>(day_of_year) - 1.0) / 365.0 - 0.5,
      (static_cast<double>(static_cast<unsigned>(ymd.day())) - 1.0) / 30.0 - 0.5,
      static_cast<double>(day_of_week) / 6.0 - 0.5,
      static_cast<double>(tod.hours().count()) / 23.0 - 0.5,
      static_cast<double>(tod.minutes().count()) / 59.0 - 0.5,
  };
}

std::vector<WindowSample> windowize_values(const std::vector<double>& values,
                                           const std::string& source, std::size_t enc_len,
                                           std::size_t pred_len, std::size_t stride) {
  if (enc_len == 0 || pred_len == 0 || stride == 0) {
    throw ParameterError("windowize: lengths and stride must be positive");
  }
  std::vector<WindowSample> out;
  const std::size_t span = enc_len + pred_len;
  for (std::size_t off = 0; off + span <= values.size(); off += stride) {
    WindowSample w;
    w.x.assign(values.begin() + off, values.begin() + off + enc_len);
    w.y.assign(values.begin() + off + enc_len, values.begin() + off + span);
    w.y_raw = w.y;
    w.source = source;
    w.offset = off;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WindowSample> windowize(const Segment& seg, std::size_t enc_len,
                                    std::size_t pred_len, std::size_t subject,
                                    std::size_t stride) {
  auto out = windowize_values(seg.values, seg.id(), enc_len, pred_len, stride);
  for (auto& w : out) {
    w.subject = subject;
    w.time_features = kCgmTimeFeatures;
    w.time_feat.reserve(enc_len * kCgmTimeFeatures);
    w.future_time_feat.reserve(pred_len * kCgmTimeFeatures);
    for (std::size_t i = 0; i < enc_len + pred_len; ++i) {
      const auto f = time_features(seg.timestamp(w.offset + i));
      auto& dst = i < enc_len ? w.time_feat : w.future_time_feat;
      dst.insert(dst.end(), f.begin(), f.end());
    }
  }
  return out;
}

}  // namespace imm::data
