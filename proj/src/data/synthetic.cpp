#include "imm/data/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "imm/error.hpp"
#include "imm/random.hpp"

namespace imm::data {
namespace {

/// Lower Cholesky factor of a small dense SPD matrix (row-major, n x n).
std::vector<double> cholesky(std::vector<double> a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    diag = std::sqrt(std::max(diag, 0.0));
    a[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = diag > 0.0 ? v / diag : 0.0;
    }
    for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
  }
  return a;
}

struct GpSampler {
  std::size_t n = 0;
  std::vector<double> factor;

  std::vector<double> draw(Rng& rng) const {
    std::vector<double> z(n), out(n, 0.0);
    for (double& v : z) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k <= i; ++k) out[i] += factor[i * n + k] * z[k];
    return out;
  }
};

double se_kernel(double s, double t, double amplitude, double length) {
  const double d = (s - t) / length;
  return amplitude * amplitude * std::exp(-0.5 * d * d);
}

constexpr double kJitter = 1e-10;

GpSampler shared_sampler(const std::vector<double>& grid, const SyntheticConfig& cfg) {
  const std::size_t n = grid.size();
  std::vector<double> cov(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cov[i * n + j] = se_kernel(grid[i], grid[j], cfg.amplitude, cfg.length_scale) +
                       (i == j ? kJitter : 0.0);
  return {n, cholesky(std::move(cov), n)};
}

// Residual GP on t >= 0 conditioned on r(0) = 0.
GpSampler residual_sampler(const std::vector<double>& times, const SyntheticConfig& cfg) {
  const std::size_t n = times.size();
  const double k00 = se_kernel(0.0, 0.0, cfg.amplitude, cfg.length_scale);
  std::vector<double> cov(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double a = se_kernel(times[i], times[j], cfg.amplitude, cfg.length_scale);
      const double b = se_kernel(times[i], 0.0, cfg.amplitude, cfg.length_scale) *
                       se_kernel(0.0, times[j], cfg.amplitude, cfg.length_scale) / k00;
      cov[i * n + j] = a - b + (i == j ? kJitter : 0.0);
    }
  return {n, cholesky(std::move(cov), n)};
}

}  // namespace

void SyntheticConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("synthetic config: ") + what);
  };
  require(n_train > 0 && n_val > 0 && n_test > 0, "series counts must be positive");
  require(grid_step > 0.0 && grid_end > grid_start, "grid must be a nonempty increasing range");
  require(grid_start < 0.0 && grid_end >= 0.0, "grid must straddle the branch point t = 0");
  require(length_scale > 0.0 && amplitude > 0.0 && obs_noise > 0.0,
          "length scale, amplitude and noise must be positive");
  require(branch_prob >= 0.0 && branch_prob <= 1.0, "branch_prob must lie in [0, 1]");
  require(branch_slope >= 0.0, "branch_slope must be nonnegative");
}

std::vector<double> SyntheticConfig::grid() const {
  std::vector<double> g;
  const auto steps = static_cast<std::size_t>(std::floor((grid_end - grid_start) / grid_step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) g.push_back(grid_start + static_cast<double>(i) * grid_step);
  return g;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::vector<double> grid = cfg.grid();
  std::vector<double> post;
  std::size_t first_post = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] >= -1e-12) {
      if (first_post == grid.size()) first_post = i;
      post.push_back(std::max(grid[i], 0.0));
    }
  }
  const GpSampler shared = shared_sampler(grid, cfg);
  const GpSampler residual = residual_sampler(post, cfg);

  auto make = [&](std::size_t count, std::uint64_t split) {
    std::vector<SyntheticSeries> out(count);
    for (std::size_t s = 0; s < count; ++s) {
      Rng rng(derive_seed(seed, split, s));
      SyntheticSeries& series = out[s];
      series.id = s;
      series.time = grid;
      series.value = shared.draw(rng);
      series.branch = rng.uniform() < cfg.branch_prob ? 1 : -1;
      const std::vector<double> r = residual.draw(rng);
      for (std::size_t i = first_post; i < grid.size(); ++i) {
        const double t = post[i - first_post];
        series.value[i] += series.branch * cfg.branch_slope * t + r[i - first_post];
      }
      for (double& v : series.value) v += cfg.obs_noise * rng.normal();
    }
    return out;
  };
  return {make(cfg.n_train, 0), make(cfg.n_val, 1), make(cfg.n_test, 2)};
}

void write_synthetic_csv(const std::filesystem::path& path,
                         const std::vector<SyntheticSeries>& series) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series_id,time,value\n";
  char buf[96];
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.time.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", s.id, s.time[i], s.value[i]);
      out << buf;
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<SyntheticSeries> read_synthetic_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("series_id,time,value", 0) != 0) {
    throw DataError(path.string() + ":1: expected header series_id,time,value");
  }
  std::map<std::size_t, SyntheticSeries> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::size_t id = 0;
    double t = 0.0, v = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream row(line);
    if (!(row >> id >> c1 >> t >> c2 >> v) || c1 != ',' || c2 != ',') {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    auto& s = by_id[id];
    s.id = id;
    s.time.push_back(t);
    s.value.push_back(v);
  }
  std::vector<SyntheticSeries> out;
  out.reserve(by_id.size());
  for (auto& [id, s] : by_id) out.push_back(std::move(s));
  return out;
}

}  // namespace imm::data
