#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "svrank/errors.hpp"
#include "svrank/inference.hpp"
#include "svrank/noise_estimation.hpp"
#include "svrank/rank_selection.hpp"

namespace svrank {

inline constexpr const char* kReportSchemaVersion = "svrank-report/1";

// ---------------------------------------------------------------------------
// Matrix ingestion: delimiter-separated numeric text, optional header line.
// Delimiter is auto-detected from {tab, comma, semicolon, whitespace} unless
// forced.  Malformed cells are reported with 1-based row/column positions.
// ---------------------------------------------------------------------------

struct MatrixReadOptions {
  char delimiter = '\0';  // '\0' = auto-detect
  bool header = false;
  bool center_columns = false;
};

namespace detail {

inline char detect_delimiter(const std::string& line) {
  for (char c : {'\t', ',', ';'})
    if (line.find(c) != std::string::npos) return c;
  return ' ';
}

inline std::vector<std::string> split_fields(const std::string& line,
                                             char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) {
    // trim surrounding spaces
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string()
                                         : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace detail

struct LoadedMatrix {
  Eigen::MatrixXd entries;
  std::vector<std::string> column_names;  // empty unless header was read
  char delimiter = ' ';
};

inline LoadedMatrix read_matrix(std::istream& in, const std::string& name,
                                const MatrixReadOptions& opt = {}) {
  LoadedMatrix result;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n_cols = 0;
  bool header_pending = opt.header;
  char delim = opt.delimiter;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() ||
        line.find_first_not_of(" \t") == std::string::npos ||
        line[line.find_first_not_of(" \t")] == '#')
      continue;
    if (delim == '\0') delim = detail::detect_delimiter(line);
    std::vector<std::string> fields = detail::split_fields(line, delim);
    if (header_pending) {
      result.column_names = std::move(fields);
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      try {
        std::size_t used = 0;
        const double v = std::stod(fields[j], &used);
        if (used != fields[j].size()) throw std::invalid_argument(fields[j]);
        row.push_back(v);
      } catch (const std::exception&) {
        throw input_error(name + ": line " + std::to_string(line_no) +
                          ", column " + std::to_string(j + 1) +
                          ": cannot parse '" + fields[j] + "' as a number");
      }
      if (!std::isfinite(row.back()))
        throw input_error(name + ": line " + std::to_string(line_no) +
                          ", column " + std::to_string(j + 1) +
                          ": non-finite value");
    }
    if (n_cols == 0) {
      n_cols = row.size();
    } else if (row.size() != n_cols) {
      throw input_error(name + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(n_cols));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw input_error(name + ": no numeric rows found");
  result.entries.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(n_cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n_cols; ++j)
      result.entries(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(j)) = rows[i][j];
  if (opt.center_columns) {
    const Eigen::RowVectorXd means = result.entries.colwise().mean();
    result.entries.rowwise() -= means;
  }
  result.delimiter = delim;
  return result;
}

inline LoadedMatrix read_matrix_file(const std::string& path,
                                     const MatrixReadOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open input file: " + path);
  return read_matrix(in, path, opt);
}

// ---------------------------------------------------------------------------
// JSON reports.  Every report carries the schema version and an echo of the
// effective configuration, so results are reproducible from the report alone.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const TestOutcome& outcome) {
  nlohmann::json j{
      {"k", outcome.k},
      {"method", to_string(outcome.method)},
      {"p_value", outcome.p_value},
      {"statistic", outcome.statistic},
      {"sigma2", outcome.sigma2_used},
  };
  if (!outcome.diagnostics.empty()) {
    nlohmann::json d;
    for (const auto& [key, value] : outcome.diagnostics) d[key] = value;
    j["diagnostics"] = d;
  }
  return j;
}

inline nlohmann::json to_json(const ConfidenceInterval& ci) {
  return {{"k", ci.k},
          {"level", ci.level},
          {"lower", ci.lower},
          {"upper", ci.upper}};
}

inline nlohmann::json to_json(const RankDecision& decision) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < decision.pvalues.size(); ++i) {
    nlohmann::json step{{"k", static_cast<int>(i) + 1},
                        {"p_value", decision.pvalues[i]}};
    if (i < decision.per_step_thresholds.size())
      step["threshold"] = decision.per_step_thresholds[i];
    steps.push_back(step);
  }
  return {{"rank", decision.kappa_hat},
          {"rule", decision.rule == StopRule::simple ? "simple" : "strong"},
          {"alpha", decision.alpha},
          {"steps", steps}};
}

inline nlohmann::json to_json(const NoiseEstimate& estimate) {
  nlohmann::json j{{"sigma2", estimate.sigma2},
                   {"variant", to_string(estimate.variant)}};
  if (estimate.lambda_used) j["lambda"] = *estimate.lambda_used;
  if (estimate.df) j["df"] = *estimate.df;
  if (estimate.c) j["c"] = *estimate.c;
  if (estimate.cv_folds) j["folds"] = *estimate.cv_folds;
  return j;
}

inline nlohmann::json make_report(const std::string& command,
                                  nlohmann::json config,
                                  nlohmann::json body) {
  return {{"schema", kReportSchemaVersion},
          {"command", command},
          {"config", std::move(config)},
          {"result", std::move(body)}};
}

// ---------------------------------------------------------------------------
// Experiment tables: delimiter-separated values with a '#'-prefixed metadata
// preamble (seed, design, git-free provenance) so each table is self-dating.
// ---------------------------------------------------------------------------

struct DsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
  char delimiter = '\t';

  void write(std::ostream& out) const {
    for (const auto& [key, value] : metadata)
      out << "# " << key << ": " << value << "\n";
    for (std::size_t j = 0; j < header.size(); ++j)
      out << (j ? std::string(1, delimiter) : std::string()) << header[j];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j)
        out << (j ? std::string(1, delimiter) : std::string()) << row[j];
      out << "\n";
    }
  }

  void write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open output file: " + path);
    write(out);
  }
};

inline std::string format_double(double v, int precision = 6) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

}  // namespace svrank
