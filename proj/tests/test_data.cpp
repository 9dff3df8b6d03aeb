#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "imm/data/cgm.hpp"
#include "imm/data/manifest.hpp"
#include "imm/data/normalize.hpp"
#include "imm/data/synthetic.hpp"
#include "imm/error.hpp"
#include "imm/random.hpp"

using namespace imm;
using namespace imm::data;

namespace {

std::vector<RawSeries> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "test.csv");
}

RawSeries series_of(std::vector<double> glucose, std::int64_t start = 1'600'000'000, std::int64_t step = 300) {
  RawSeries s{"s1", {}};
  for (std::size_t i = 0; i < glucose.size(); ++i) s.readings.push_back({start + static_cast<std::int64_t>(i) * step, glucose[i]});
  return s;
}

std::vector<Segment> make_segments(std::size_t n) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"subj" + std::to_string(i % 3), static_cast<std::int64_t>(1000 * i), 300, {100.0, 101.0}});
  return out;
}

double variance_at(const std::vector<SyntheticSeries>& s, std::size_t idx) {
  double m = 0.0, v = 0.0;
  for (const auto& x : s) m += x.value[idx];
  m /= s.size();
  for (const auto& x : s) v += (x.value[idx] - m) * (x.value[idx] - m);
  return v / (s.size() - 1);
}

}  // namespace

TEST(Ingest, HeaderOnlyAndSingleSubject) {
  EXPECT_TRUE(parse("subject_id,timestamp,glucose_mgdl\n").empty());
  const auto s = parse("subject_id,timestamp,glucose_mgdl\na,600,110\na,0,100\na,300,105\n");
  ASSERT_EQ(s.size(), 1u);
  ASSERT_EQ(s[0].readings.size(), 3u);
  EXPECT_EQ(s[0].readings[0], (Reading{0, 100}));
  EXPECT_EQ(s[0].readings[1], (Reading{300, 105}));
  EXPECT_EQ(s[0].readings[2], (Reading{600, 110}));
}

TEST(Ingest, GroupsAndSortsSubjects) {
  const auto s = parse("glucose_mgdl,subject_id,timestamp\n90,b,300\n80,a,0\n95,b,0\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].subject_id, "a");
  EXPECT_EQ(s[1].subject_id, "b");
  EXPECT_EQ(s[1].readings[0].glucose, 95.0);
}

TEST(Ingest, MalformedRowsReportLineNumbers) {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      parse(text);
      FAIL() << "expected DataError for: " << text;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("subject_id,timestamp\n", "glucose_mgdl");
  expect_error("subject_id,timestamp,glucose_mgdl\na,0,100\na,300,abc\n", "test.csv:3");
  expect_error("subject_id,timestamp,glucose_mgdl\na,0,100\na,0,101\n", "duplicate");
  expect_error("subject_id,timestamp,glucose_mgdl\na,x,100\n", "test.csv:2");
  expect_error("subject_id,timestamp,glucose_mgdl\na,0,-5\n", "positive");
  EXPECT_THROW(ingest_csv("/nonexistent/file.csv"), DataError);
}

TEST(Segment, JumpRuleIsStrict) {
  EXPECT_EQ(segment(series_of({100, 145}), {}).size(), 2u);
  EXPECT_EQ(segment(series_of({100, 140}), {}).size(), 1u);
  EXPECT_EQ(segment(series_of({140, 100}), {}).size(), 1u);
  EXPECT_EQ(segment(series_of({145, 100}), {}).size(), 2u);
}

TEST(Segment, GapsSplitWithoutInterpolation) {
  RawSeries s = series_of({100, 102, 104, 106});
  s.readings[2].timestamp += 300;  // 10-minute gap before index 2
  s.readings[3].timestamp += 300;
  const auto segs = segment(s, {});
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].values, (std::vector<double>{100, 102}));
  EXPECT_EQ(segs[1].values, (std::vector<double>{104, 106}));
  EXPECT_EQ(segs[1].start, s.readings[2].timestamp);
}

TEST(Segment, MinimumLengthDropsShortPieces) {
  SegmentOptions o;
  o.min_length = 3;
  const auto segs = segment(series_of({100, 101, 200, 201, 202}), o);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].values.size(), 3u);
}

TEST(Segment, InvariantsHoldAndCleanDataIsIdempotent) {
  Rng rng(3);
  RawSeries s{"p", {}};
  std::int64_t t = 0;
  double g = 120;
  for (int i = 0; i < 2000; ++i) {
    t += rng.uniform() < 0.02 ? 600 : 300;
    g = std::max(40.0, g + (rng.uniform() < 0.02 ? 60.0 : rng.uniform(-10, 10)));
    s.readings.push_back({t, g});
  }
  const auto segs = segment(s, {});
  std::size_t total = 0;
  for (const auto& seg : segs) {
    total += seg.values.size();
    for (std::size_t i = 1; i < seg.values.size(); ++i) EXPECT_LE(std::fabs(seg.values[i] - seg.values[i - 1]), 40.0);
    RawSeries again{seg.subject_id, {}};
    for (std::size_t i = 0; i < seg.values.size(); ++i) again.readings.push_back({seg.timestamp(i), seg.values[i]});
    const auto re = segment(again, {});
    ASSERT_EQ(re.size(), 1u);
    EXPECT_EQ(re[0].values, seg.values);
  }
  EXPECT_EQ(total, s.readings.size());
}

TEST(Partition, ExactRatios) {
  auto p = partition(make_segments(22), 1);
  EXPECT_EQ(p.train.size(), 20u);
  EXPECT_EQ(p.val.size(), 1u);
  EXPECT_EQ(p.test.size(), 1u);
  p = partition(make_segments(44), 1);
  EXPECT_EQ(p.train.size(), 40u);
  EXPECT_EQ(p.val.size(), 2u);
  EXPECT_EQ(p.test.size(), 2u);
  EXPECT_TRUE(p.warning.empty());
}

TEST(Partition, TooFewSegmentsFallBackToTrain) {
  const auto p = partition(make_segments(21), 1);
  EXPECT_EQ(p.train.size(), 21u);
  EXPECT_TRUE(p.val.empty());
  EXPECT_TRUE(p.test.empty());
  EXPECT_FALSE(p.warning.empty());
}

TEST(Partition, DeterministicDisjointExhaustiveAndOrderFree) {
  auto segs = make_segments(100);
  const auto a = partition(segs, 7);
  std::reverse(segs.begin(), segs.end());
  const auto b = partition(segs, 7);
  const auto c = partition(segs, 8);
  auto ids = [](const std::vector<Segment>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.id());
    return out;
  };
  EXPECT_EQ(ids(a.train), ids(b.train));
  EXPECT_EQ(ids(a.test), ids(b.test));
  EXPECT_NE(ids(a.test), ids(c.test));
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (const auto& s : *part) EXPECT_TRUE(all.insert(s.id()).second);
  EXPECT_EQ(all.size(), 100u);
}

TEST(Windowize, CountsAndContiguity) {
  Segment seg{"s", 0, 300, {1, 2, 3, 4, 5, 6, 7}};
  EXPECT_EQ(windowize(Segment{"s", 0, 300, {1, 2, 3, 4, 5}}, 3, 2, 0).size(), 1u);
  const auto w = windowize(seg, 3, 2, 4);
  ASSERT_EQ(w.size(), 3u);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(w[i].offset, i);
    EXPECT_EQ(w[i].subject, 4u);
    EXPECT_EQ(w[i].x, (std::vector<double>{1.0 + i, 2.0 + i, 3.0 + i}));
    EXPECT_EQ(w[i].y, (std::vector<double>{4.0 + i, 5.0 + i}));
    EXPECT_EQ(w[i].time_feat.size(), 3 * kCgmTimeFeatures);
    EXPECT_EQ(w[i].future_time_feat.size(), 2 * kCgmTimeFeatures);
  }
  EXPECT_TRUE(windowize(Segment{"s", 0, 300, {1, 2, 3}}, 3, 2, 0).empty());
  EXPECT_EQ(windowize(seg, 3, 2, 0, 2).size(), 2u);
}

TEST(TimeFeatures, Scaling) {
  // 2021-03-10 12:00:00 UTC, a Wednesday.
  const auto f = time_features(1615377600);
  EXPECT_NEAR(f[3], 12.0 / 23.0 - 0.5, 1e-15);
  EXPECT_NEAR(f[3], 0.0217, 1e-4);
  EXPECT_NEAR(f[0], (69.0 - 1.0) / 365.0 - 0.5, 1e-15);
  EXPECT_NEAR(f[1], (10.0 - 1.0) / 30.0 - 0.5, 1e-15);
  EXPECT_NEAR(f[2], 2.0 / 6.0 - 0.5, 1e-15);
  EXPECT_NEAR(f[4], -0.5, 1e-15);
  for (std::int64_t t = 0; t < 400LL * 86400; t += 7919) {
    for (double v : time_features(t)) {
      EXPECT_GE(v, -0.5);
      EXPECT_LE(v, 0.5 + 1e-12);
    }
  }
}

TEST(Normalize, DefiningPropertiesAndRoundTrip) {
  Rng rng(4);
  std::vector<double> v(500);
  for (double& x : v) x = 120 + 30 * rng.normal();
  const auto n = fit_normalizer(v);
  double m = 0.0, s = 0.0;
  for (double x : v) m += n.apply(x) / v.size();
  for (double x : v) s += (n.apply(x) - m) * (n.apply(x) - m) / v.size();
  EXPECT_NEAR(m, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(s), 1.0, 1e-9);
  for (double x : v) EXPECT_NEAR(n.invert(n.apply(x)), x, 1e-12);
}

TEST(Normalize, ConstantDataShiftsOnly) {
  std::string warning;
  const std::vector<double> v(10, 5.0);
  const auto n = fit_normalizer(v, &warning);
  EXPECT_EQ(n.scale, 1.0);
  EXPECT_EQ(n.apply(5.0), 0.0);
  EXPECT_FALSE(warning.empty());
  EXPECT_THROW(fit_normalizer(std::vector<double>{}), DomainError);
}

TEST(Normalize, WindowsKeepRawTargets) {
  std::vector<WindowSample> w = windowize_values({10, 20, 30, 40}, "s", 2, 2);
  const Normalizer n{25.0, 10.0};
  normalize_windows(n, w);
  EXPECT_EQ(w[0].x, (std::vector<double>{-1.5, -0.5}));
  EXPECT_EQ(w[0].y, (std::vector<double>{0.5, 1.5}));
  EXPECT_EQ(w[0].y_raw, (std::vector<double>{30, 40}));
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticConfig c;
  c.n_train = 20;
  c.n_val = c.n_test = 5;
  const auto a = generate_synthetic(c, 11), b = generate_synthetic(c, 11), d = generate_synthetic(c, 12);
  ASSERT_EQ(a.train.size(), 20u);
  EXPECT_EQ(a.train[3].value, b.train[3].value);
  EXPECT_EQ(a.test[4].value, b.test[4].value);
  EXPECT_NE(a.train[3].value, d.train[3].value);
  EXPECT_EQ(a.train[0].time.front(), -4.0);
  EXPECT_EQ(a.train[0].time.back(), 3.0);
  EXPECT_EQ(a.train[0].time.size(), 15u);
}

TEST(Synthetic, AllIncreasingBranch) {
  SyntheticConfig c;
  c.n_train = 300;
  c.n_val = c.n_test = 1;
  c.branch_prob = 1.0;
  const auto d = generate_synthetic(c, 5);
  double at0 = 0.0, at3 = 0.0;
  for (const auto& s : d.train) {
    EXPECT_EQ(s.branch, 1);
    at0 += s.value[8];
    at3 += s.value.back();
  }
  EXPECT_GT(at3 / 300, at0 / 300);
}

TEST(Synthetic, BimodalAfterBranchPoint) {
  const SyntheticConfig c;
  const auto d = generate_synthetic(c, 6);
  ASSERT_EQ(d.train.size(), 2000u);
  // Histogram of values at t = 3: the bin at the midpoint of the two branch
  // means holds less than half of either mode's bin.
  double up = 0.0, down = 0.0;
  std::size_t n_up = 0, n_down = 0;
  for (const auto& s : d.train) {
    (s.branch > 0 ? up : down) += s.value.back();
    (s.branch > 0 ? n_up : n_down)++;
  }
  up /= n_up;
  down /= n_down;
  const double width = 0.1;
  auto count_near = [&](double centre) {
    std::size_t n = 0;
    for (const auto& s : d.train) n += std::fabs(s.value.back() - centre) < width / 2;
    return static_cast<double>(n);
  };
  const double mid = count_near(0.5 * (up + down));
  EXPECT_LT(mid, 0.5 * count_near(up));
  EXPECT_LT(mid, 0.5 * count_near(down));

  // Every post-branch time point is more spread out than any pre-branch one.
  const auto grid = c.grid();
  double pre_max = 0.0, post_min = 1e300;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = variance_at(d.train, i);
    if (grid[i] < 0.0) pre_max = std::max(pre_max, v);
    if (grid[i] > 0.0) post_min = std::min(post_min, v);
  }
  EXPECT_GT(post_min, pre_max);
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig c;
  c.branch_prob = 1.5;
  EXPECT_THROW(c.validate(), ParameterError);
  c.branch_prob = 1.0;
  EXPECT_NO_THROW(c.validate());
  c = SyntheticConfig{};
  c.length_scale = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = SyntheticConfig{};
  c.n_test = 0;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Synthetic, CsvRoundTrip) {
  SyntheticConfig c;
  c.n_train = 3;
  c.n_val = c.n_test = 1;
  const auto d = generate_synthetic(c, 9);
  const auto path = std::filesystem::temp_directory_path() / "imm_test_synth.csv";
  write_synthetic_csv(path, d.train);
  const auto back = read_synthetic_csv(path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].id, d.train[i].id);
    EXPECT_EQ(back[i].time, d.train[i].time);
    EXPECT_EQ(back[i].value, d.train[i].value);
  }
  std::filesystem::remove(path);
}

TEST(Manifest, RoundTrip) {
  DatasetManifest m;
  m.kind = "cgm";
  m.normalizer = {123.456789012345678, 0.1 + 0.2};
  m.splits = {{"a@0", "train"}, {"b@300", "test"}};
  m.subjects = {{"a", 1}, {"b", 2}};
  m.settings = {{"seed", "3"}};
  const auto path = std::filesystem::temp_directory_path() / "imm_test_manifest.txt";
  write_manifest(path, m);
  EXPECT_EQ(read_manifest(path), m);
  std::filesystem::remove(path);
  EXPECT_THROW(read_manifest(path), DataError);
}
