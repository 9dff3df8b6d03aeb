#include "imm/eval/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "imm/error.hpp"

namespace imm::eval {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Rows of a CSV after checking its header.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& header, std::size_t fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw DataError(path.string() + ": expected header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != fields) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(fields) + " fields");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path.string() + ": bad number '" + s + "'");
  }
}

std::size_t to_size(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError(path.string() + ": bad integer '" + s + "'");
  }
}

}  // namespace

void emit_reports(const ReportBundle& r, const std::filesystem::path& dir, bool svg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "metrics.csv";
    auto out = open_out(path);
    out << "window,class,ape,rmse,n\n";
    for (const auto& row : r.metrics.rows) {
      out << row.window << ',' << to_string(row.event) << ',' << (row.ape ? num(*row.ape) : "")
          << ',' << num(row.rmse) << ',' << row.n << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "calibration.csv";
    auto out = open_out(path);
    out << "horizon,eta,eta_hat\n";
    for (const auto& p : r.calibration.points) {
      out << p.horizon << ',' << num(p.eta) << ',' << num(p.eta_hat) << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "sharpness.csv";
    auto out = open_out(path);
    out << "horizon,variance\n";
    for (std::size_t h = 0; h < r.sharpness.variance.size(); ++h) {
      out << h + 1 << ',' << num(r.sharpness.variance[h]) << '\n';
    }
    finish(out, path);
  }
  {
    const auto path = dir / "loglik.csv";
    auto out = open_out(path);
    out << "model,avg_ll\n";
    for (const auto& row : r.loglik) out << row.model << ',' << num(row.avg_ll) << '\n';
    finish(out, path);
  }
  if (svg) {
    const auto path = dir / "calibration.svg";
    auto out = open_out(path);
    out << calibration_svg(r.calibration);
    finish(out, path);
  }
}

ReportBundle read_reports(const std::filesystem::path& dir) {
  ReportBundle r;
  {
    const auto path = dir / "metrics.csv";
    for (const auto& f : read_csv(path, "window,class,ape,rmse,n", 5)) {
      MetricsRow row;
      row.window = to_size(f[0], path);
      row.event = parse_event_class(f[1]);
      if (!f[2].empty()) row.ape = to_double(f[2], path);
      row.rmse = to_double(f[3], path);
      row.n = to_size(f[4], path);
      r.metrics.rows.push_back(row);
    }
  }
  {
    const auto path = dir / "calibration.csv";
    for (const auto& f : read_csv(path, "horizon,eta,eta_hat", 3)) {
      r.calibration.points.push_back(
          {to_size(f[0], path), to_double(f[1], path), to_double(f[2], path)});
    }
  }
  {
    const auto path = dir / "sharpness.csv";
    for (const auto& f : read_csv(path, "horizon,variance", 2)) {
      if (to_size(f[0], path) != r.sharpness.variance.size() + 1) {
        throw DataError(path.string() + ": horizons out of order");
      }
      r.sharpness.variance.push_back(to_double(f[1], path));
    }
  }
  {
    const auto path = dir / "loglik.csv";
    for (const auto& f : read_csv(path, "model,avg_ll", 2)) {
      r.loglik.push_back({f[0], to_double(f[1], path)});
    }
  }
  return r;
}

std::string calibration_svg(const CalibrationReport& report) {
  constexpr double size = 400.0, pad = 40.0;
  const double span = size - 2 * pad;
  auto px = [&](double v) { return pad + v * span; };
  auto py = [&](double v) { return size - pad - v * span; };
  static const char* const colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                       "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  svg << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << span << "\" height=\"" << span
      << "\" fill=\"none\" stroke=\"#000\"/>\n";
  svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
      << py(1) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  const std::size_t horizons = report.horizons();
  for (std::size_t h = 1; h <= horizons; ++h) {
    svg << "<polyline fill=\"none\" stroke=\"" << colors[(h - 1) % 8] << "\" points=\"";
    bool first = true;
    for (const auto& p : report.points) {
      if (p.horizon != h) continue;
      if (!first) svg << ' ';
      svg << px(p.eta) << ',' << py(p.eta_hat);
      first = false;
    }
    svg << "\"><title>horizon " << h << "</title></polyline>\n";
  }
  svg << "<text x=\"" << size / 2 << "\" y=\"" << size - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">nominal level</text>\n";
  svg << "<text x=\"12\" y=\"" << size / 2 << "\" transform=\"rotate(-90 12 " << size / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">empirical frequency</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace imm::eval
