#pragma once

// Artifact writers for the command-line runner: RFC-4180 CSV with
// shortest round-trip doubles, JSON documents, binary density frames and
// run manifests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pilotwave/grid.hpp"

namespace pilotwave::io {

/// Shortest decimal that parses back to the same double. NaN and the
/// infinities are written as "nan", "inf" and "-inf".
std::string format_double(double v);

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& data);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  using Cell = std::variant<std::string, double, long long>;

  /// Opens `path` for writing and emits the header row. Throws
  /// InvalidArgument when the file cannot be created.
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  /// Writes one record; the cell count must match the header.
  void row(const std::vector<Cell>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  void write_record(const std::vector<std::string>& fields);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// Writes the cell values as native float64, row-major with x fastest, to
/// `prefix`.bin and a sidecar `prefix`.json with bounds, nx, ny and T.
/// Returns the two paths.
std::vector<std::filesystem::path> write_frame(const std::filesystem::path& prefix, const DensityGrid& frame);

/// Reads a frame written by write_frame from its sidecar path.
DensityGrid read_frame(const std::filesystem::path& sidecar);

/// Provenance record written next to every run's artifacts. Contains no
/// timestamps so that identical runs give identical manifests.
struct Manifest {
  std::string tool = "pilotwave";
  std::string version;
  std::string subcommand;
  std::string config;  // effective configuration, one key=value per line
  std::uint64_t seed = 0;
  nlohmann::json tolerances = nlohmann::json::object();
  std::vector<std::string> outputs;

  std::string config_hash() const { return fnv1a_hex(config); }
  nlohmann::json to_json() const;
};

}  // namespace pilotwave::io
