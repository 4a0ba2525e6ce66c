#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lyspin/common.hpp"

namespace lyspin {

inline constexpr int kSchemaVersion = 1;

using Cell = std::variant<double, long long, std::string>;

/// Result table with a fixed column order; complex values occupy paired
/// `<name>_re`, `<name>_im` columns.
struct Table {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  void add_column(const std::string& name) { columns.push_back(name); }
  void add_complex_column(const std::string& name) {
    columns.push_back(name + "_re");
    columns.push_back(name + "_im");
  }

  struct RowBuilder {
    std::vector<Cell> cells;
    RowBuilder& operator()(double v) {
      cells.emplace_back(v);
      return *this;
    }
    RowBuilder& operator()(long long v) {
      cells.emplace_back(v);
      return *this;
    }
    RowBuilder& operator()(int v) { return (*this)(static_cast<long long>(v)); }
    RowBuilder& operator()(std::size_t v) { return (*this)(static_cast<long long>(v)); }
    RowBuilder& operator()(const std::string& v) {
      cells.emplace_back(v);
      return *this;
    }
    RowBuilder& operator()(const char* v) { return (*this)(std::string(v)); }
    RowBuilder& operator()(cplx v) {
      cells.emplace_back(v.real());
      cells.emplace_back(v.imag());
      return *this;
    }
  };

  void add_row(const RowBuilder& r) {
    require(r.cells.size() == columns.size(), ErrorCode::InvalidArgument,
            "row has " + std::to_string(r.cells.size()) + " cells for " + std::to_string(columns.size()) + " columns");
    rows.push_back(r.cells);
  }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_double(*d);
  if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_cell(row[k]);
    os << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) {
    // JSON has no infinities; encode them as strings.
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    if (std::isnan(*d)) return "nan";
    return *d;
  }
  if (const long long* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

/// Document layout: schema_version, command, metadata, columns, rows
/// (each row an object keyed by column name).
inline nlohmann::ordered_json to_json(const Table& t) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = t.command;
  doc["metadata"] = t.metadata;
  doc["columns"] = t.columns;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < row.size(); ++k) r[t.columns[k]] = cell_json(row[k]);
    doc["rows"].push_back(r);
  }
  return doc;
}

/// Writes via a temporary file in the same directory, then renames.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + path.parent_path().string() + ": " + ec.message());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot rename onto " + path.string());
  }
}

enum class Format { Csv, Json };

inline std::filesystem::path emit(const Table& t, const std::filesystem::path& out_dir, Format format) {
  require(!t.rows.empty(), ErrorCode::IoFailure, "refusing to write an empty result set for " + t.command);
  const auto path = out_dir / (t.command + (format == Format::Csv ? ".csv" : ".json"));
  if (format == Format::Csv) {
    // Metadata that does not fit the rectangular layout goes to a sidecar.
    write_atomic(path, to_csv(t));
    write_atomic(out_dir / (t.command + ".meta.json"), t.metadata.dump(2) + "\n");
  } else {
    write_atomic(path, to_json(t).dump(2) + "\n");
  }
  return path;
}

}  // namespace lyspin
