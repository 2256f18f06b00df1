#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace rankrace::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Report {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<Table> tables;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
};

enum class Format { Csv, Json };

/// Shortest decimal that round-trips; "inf", "-inf" and "nan" otherwise.
std::string format_number(double x);

/// Csv writes the first table to `path` and each further table to
/// `<stem>.<table name>.csv`, every file opening with `#` comment lines that
/// echo the version, command, config and summary. Json writes one document.
/// An empty path means stdout (Csv prints all tables one after another).
void write_report(const Report& report, const std::string& path, Format format);

/// Json when the path ends in ".json", Csv otherwise.
Format format_for(const std::string& path, const std::string& requested);

/// The summary as `key=value` lines for the terminal.
std::string summary_lines(const Report& report);

}  // namespace rankrace::cli
