#include "output.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rankrace/errors.hpp"

namespace rankrace::cli {
namespace {

using nlohmann::ordered_json;

// JSON has no infinities; they are written as null.
ordered_json number_json(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

void write_header(std::ostream& os, const Report& report) {
  os << "# rankrace " << kArtifactVersion << " schema " << kSchemaVersion << '\n';
  os << "# command: " << report.command << '\n';
  os << "# config: " << report.config.dump() << '\n';
  if (!report.summary.empty()) os << "# summary: " << report.summary.dump() << '\n';
}

void write_csv_table(std::ostream& os, const Table& table) {
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    os << (j ? "," : "") << table.columns[j];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_number(row[j]);
    os << '\n';
  }
}

std::ofstream open_or_throw(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Format format_for(const std::string& path, const std::string& requested) {
  if (requested == "json") return Format::Json;
  if (requested == "csv") return Format::Csv;
  if (!requested.empty()) {
    throw Error(ErrorKind::InvalidParameter, "format must be csv or json, got " + requested);
  }
  return std::filesystem::path(path).extension() == ".json" ? Format::Json : Format::Csv;
}

void write_report(const Report& report, const std::string& path, Format format) {
  if (format == Format::Json) {
    ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["artifact"] = "rankrace";
    doc["version"] = kArtifactVersion;
    doc["command"] = report.command;
    doc["config"] = report.config;
    ordered_json summary = ordered_json::object();
    for (const auto& [k, v] : report.summary.items()) {
      summary[k] = v.is_number_float() ? number_json(v.get<double>()) : v;
    }
    doc["summary"] = summary;
    ordered_json tables = ordered_json::object();
    for (const Table& t : report.tables) {
      ordered_json rows = ordered_json::array();
      for (const auto& row : t.rows) {
        ordered_json r = ordered_json::array();
        for (double x : row) r.push_back(number_json(x));
        rows.push_back(std::move(r));
      }
      tables[t.name] = {{"columns", t.columns}, {"rows", std::move(rows)}};
    }
    doc["tables"] = std::move(tables);
    if (path.empty()) {
      std::cout << doc.dump(2) << '\n';
    } else {
      open_or_throw(path) << doc.dump(2) << '\n';
    }
    return;
  }

  if (path.empty()) {
    write_header(std::cout, report);
    for (const Table& t : report.tables) {
      std::cout << "# table: " << t.name << '\n';
      write_csv_table(std::cout, t);
    }
    return;
  }
  const std::filesystem::path base(path);
  for (std::size_t i = 0; i < report.tables.size(); ++i) {
    std::filesystem::path target = base;
    if (i > 0) {
      target = base.parent_path() /
               (base.stem().string() + "." + report.tables[i].name + base.extension().string());
    }
    std::ofstream out = open_or_throw(target);
    write_header(out, report);
    out << "# table: " << report.tables[i].name << '\n';
    write_csv_table(out, report.tables[i]);
  }
}

std::string summary_lines(const Report& report) {
  std::ostringstream os;
  for (const auto& [k, v] : report.summary.items()) {
    os << k << '=';
    if (v.is_number_float()) {
      os << format_number(v.get<double>());
    } else if (v.is_string()) {
      os << v.get<std::string>();
    } else {
      os << v.dump();
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rankrace::cli
