#pragma once

// CSV ingestion of experiment data and byte-stable CSV emission of bands,
// CDFs and study reports.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dte/core.hpp"
#include "dte/error.hpp"
#include "dte/simulation.hpp"

namespace dte::io {

struct CsvSchema {
  std::vector<std::string> covariates;  // empty: every column except arm and outcome
  std::string arm_column = "arm";
  std::string outcome_column = "outcome";
};

struct LoadedData {
  ExperimentData data;
  std::vector<std::string> arm_labels;       // arm_labels[w - 1] is the original label of arm w
  std::vector<std::string> covariate_names;
};

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a header-first CSV. Arm labels are mapped to 1..K in sorted order:
/// numerically when every label is a number, lexicographically otherwise.
inline LoadedData load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "io", "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "io", path + ": missing header row");
  const std::vector<std::string> header = detail::split_fields(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "io", path + ": no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t arm_col = column_of(schema.arm_column);
  const std::size_t outcome_col = column_of(schema.outcome_column);

  LoadedData out;
  std::vector<std::size_t> cov_cols;
  if (schema.covariates.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != arm_col && c != outcome_col) {
        cov_cols.push_back(c);
        out.covariate_names.push_back(header[c]);
      }
  } else {
    for (const auto& name : schema.covariates) {
      cov_cols.push_back(column_of(name));
      out.covariate_names.push_back(name);
    }
  }
  if (cov_cols.empty()) throw Error(ErrorCode::MissingColumn, "io", path + ": no covariate columns");

  std::vector<std::vector<double>> covs;
  std::vector<double> outcomes;
  std::vector<std::string> raw_arms;
  std::size_t row = 1;  // 1-based data row number
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_fields(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::ParseError, "io",
                  path + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    auto number = [&](std::size_t col) {
      const auto v = detail::parse_number(fields[col]);
      if (!v)
        throw Error(ErrorCode::ParseError, "io",
                    path + ": row " + std::to_string(row) + ", column '" + header[col] + "': '" + fields[col] +
                        "' is not a number");
      if (!std::isfinite(*v))
        throw Error(ErrorCode::NonFiniteValue, "io",
                    path + ": row " + std::to_string(row) + ", column '" + header[col] + "' is not finite");
      return *v;
    };
    std::vector<double> x;
    x.reserve(cov_cols.size());
    for (std::size_t c : cov_cols) x.push_back(number(c));
    covs.push_back(std::move(x));
    outcomes.push_back(number(outcome_col));
    if (fields[arm_col].empty())
      throw Error(ErrorCode::ParseError, "io", path + ": row " + std::to_string(row) + " has an empty arm label");
    raw_arms.push_back(fields[arm_col]);
    ++row;
  }

  std::vector<std::string> labels = raw_arms;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
    const auto v = detail::parse_number(s);
    return v && std::isfinite(*v);
  });
  if (numeric)
    std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return *detail::parse_number(a) < *detail::parse_number(b);
    });
  std::map<std::string, Arm> index;
  for (std::size_t k = 0; k < labels.size(); ++k) index[labels[k]] = static_cast<Arm>(k + 1);

  const auto n = static_cast<Eigen::Index>(outcomes.size());
  out.arm_labels = labels;
  out.data.num_arms = static_cast<int>(labels.size());
  out.data.covariates.resize(n, static_cast<Eigen::Index>(cov_cols.size()));
  out.data.outcomes.resize(n);
  out.data.arms.reserve(outcomes.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cov_cols.size(); ++c)
      out.data.covariates(i, static_cast<Eigen::Index>(c)) = covs[static_cast<std::size_t>(i)][c];
    out.data.outcomes[i] = outcomes[static_cast<std::size_t>(i)];
    out.data.arms.push_back(index.at(raw_arms[static_cast<std::size_t>(i)]));
  }
  return out;
}

/// Writes rows to `path`, creating parent directories.
inline void write_text(const std::string& path, const std::string& content) {
  std::error_code ec;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "io", "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "io", "write failed for " + path);
}

/// location,point,se,ci_lo,ci_hi
inline std::string band_csv(const EffectBand& band) {
  std::ostringstream os;
  os << "location,point,se,ci_lo,ci_hi\n";
  for (Eigen::Index j = 0; j < band.size(); ++j)
    os << format_double(band.locations[static_cast<std::size_t>(j)]) << ',' << format_double(band.point[j]) << ','
       << format_double(band.se[j]) << ',' << format_double(band.ci_lo[j]) << ',' << format_double(band.ci_hi[j])
       << '\n';
  return os.str();
}

/// location,method,bias,mse,reduction_pct for every listed method.
inline std::string study_csv(const SimulationReport& report, const std::vector<std::string>& methods) {
  std::ostringstream os;
  os << "location,method,bias,mse,reduction_pct\n";
  for (const auto& name : methods) {
    const MethodSummary& m = report.method(name);
    for (std::size_t j = 0; j < report.oracle.grid.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      os << format_double(report.oracle.grid[j]) << ',' << name << ',' << format_double(m.bias[jj]) << ','
         << format_double(m.mse[jj]) << ',' << format_double(m.reduction_pct[jj]) << '\n';
    }
  }
  return os.str();
}

inline void emit_band(const EffectBand& band, const std::string& path) { write_text(path, band_csv(band)); }

inline void emit_study(const SimulationReport& report, const std::vector<std::string>& methods,
                       const std::string& path) {
  write_text(path, study_csv(report, methods));
}

}  // namespace dte::io
