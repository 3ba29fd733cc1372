#include "perbbm/io.hpp"

#include <cstdio>
#include <stdexcept>

namespace perbbm::io {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header)
    : CsvWriter(path, std::vector<std::string>(header)) {}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(open_out(path)) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("CSV write failed");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},   {"arguments", arguments},       {"config", config},
          {"seed", seed},         {"version", version},           {"wall_seconds", wall_seconds},
          {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& doc) {
  RunManifest m;
  m.command = doc.at("command").get<std::string>();
  m.arguments = doc.value("arguments", nlohmann::json::object());
  m.config = doc.at("config");
  m.seed = doc.value("seed", std::uint64_t{0});
  m.version = doc.value("version", std::string(kVersion));
  m.wall_seconds = doc.value("wall_seconds", 0.0);
  m.outputs = doc.value("outputs", std::vector<std::string>{});
  return m;
}

std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  const auto path = dir / "manifest.json";
  write_json(path, m.to_json());
  return path;
}

}  // namespace perbbm::io
