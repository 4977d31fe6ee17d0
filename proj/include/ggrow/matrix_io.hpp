#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggrow/errors.hpp"
#include "ggrow/sym_matrix.hpp"

namespace ggrow {

// %.17g: round-trip exact for IEEE doubles, locale-independent (the library
// never calls setlocale).
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, const char* where) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw IoError(std::string(where) + ": cannot parse number '" + tok + "'");
  return v;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

// Rectangular numeric CSV without header: one row per line, comma-separated.
inline void write_data_csv(const std::filesystem::path& path,
                           const Eigen::MatrixXd& m) {
  auto out = detail::open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_g17(m(i, j));
    }
    out << '\n';
  }
  detail::finish_write(out, path);
}

inline Eigen::MatrixXd read_data_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = detail::split_csv_line(line);
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& t : toks)
      row.push_back(parse_double(
          t, ("'" + path.string() + "' line " + std::to_string(lineno)).c_str()));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                    ": ragged row (" + std::to_string(row.size()) + " vs " +
                    std::to_string(rows.front().size()) + " columns)");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("'" + path.string() + "' is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

// Symmetric matrix as plain CSV: d rows of d values, no header.
inline void write_matrix_csv(const std::filesystem::path& path,
                             const SymMatrix& m) {
  write_data_csv(path, m.mat());
}

inline SymMatrix read_matrix_csv(const std::filesystem::path& path) {
  const Eigen::MatrixXd m = read_data_csv(path);
  if (m.rows() != m.cols())
    throw IoError("'" + path.string() + "': matrix file must be square, got " +
                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  return SymMatrix(m);
}

// JSON envelope { "dim": d, "entries": [[...], ...] }.
inline void write_matrix_json(const std::filesystem::path& path,
                              const SymMatrix& m) {
  nlohmann::json j;
  j["dim"] = m.dim();
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < m.dim(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  j["entries"] = std::move(rows);
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  detail::finish_write(out, path);
}

inline SymMatrix read_matrix_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries") ||
      j.size() != 2)
    throw IoError("'" + path.string() +
                  "': expected an object with exactly {dim, entries}");
  const int d = j["dim"].get<int>();
  if (d < 1) throw IoError("'" + path.string() + "': dim must be >= 1");
  const auto& entries = j["entries"];
  if (!entries.is_array() || static_cast<int>(entries.size()) != d)
    throw IoError("'" + path.string() + "': entries must be a dim x dim array");
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    const auto& row = entries[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw IoError("'" + path.string() + "': row " + std::to_string(i) +
                    " has wrong length");
    for (int k = 0; k < d; ++k)
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return SymMatrix(m);
}

// Dispatch on extension: .csv or .json.
inline SymMatrix read_matrix_any(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return read_matrix_csv(path);
  if (ext == ".json") return read_matrix_json(path);
  throw IoError("'" + path.string() +
                "': unknown matrix format (expected .csv or .json)");
}

}  // namespace ggrow
