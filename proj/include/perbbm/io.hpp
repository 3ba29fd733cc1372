#pragma once

// CSV and JSON output plus the run manifest written next to every result set.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

namespace perbbm::io {

/// Shortest form is not used; every value gets 17 significant digits.
std::string format_double(double v);

/// Comma-separated, header row, LF line ends.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header);
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  template <class... Ts>
  void row(const Ts&... values) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(values)), ...);
    out_ << '\n';
  }
  void close();

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

inline constexpr const char* kVersion = "1.0.0";

struct RunManifest {
  std::string command;
  /// Arguments that reproduce the run, config path excluded.
  nlohmann::json arguments = nlohmann::json::object();
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& doc);
};

/// Writes <dir>/manifest.json and returns its path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& m);

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace perbbm::io
