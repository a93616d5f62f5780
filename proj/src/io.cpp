#include "pilotwave/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>

#include "pilotwave/errors.hpp"

namespace pilotwave::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw InvalidArgument("cannot format double");
  return std::string(buf, end);
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, h >>= 4) out[static_cast<std::size_t>(k)] = digits[h & 0xf];
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw InvalidArgument("cannot open " + path.string() + " for writing");
  if (header.empty()) throw InvalidArgument("CSV header must not be empty");
  write_record(header);
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_)
    throw InvalidArgument("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(columns_));
  std::vector<std::string> fields;
  fields.reserve(cells.size());
  for (const auto& c : cells) {
    if (const auto* s = std::get_if<std::string>(&c)) fields.push_back(*s);
    else if (const auto* d = std::get_if<double>(&c)) fields.push_back(format_double(*d));
    else fields.push_back(std::to_string(std::get<long long>(c)));
  }
  write_record(fields);
}

void CsvWriter::write_record(const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out_ << ',';
    out_ << csv_escape(fields[k]);
  }
  out_ << "\r\n";
  if (!out_) throw InvalidArgument("write failed for " + path_.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw InvalidArgument("write failed for " + path.string());
}

std::vector<std::filesystem::path> write_frame(const std::filesystem::path& prefix, const DensityGrid& frame) {
  auto bin = prefix;
  bin += ".bin";
  auto side = prefix;
  side += ".json";
  {
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw InvalidArgument("cannot open " + bin.string() + " for writing");
    out.write(reinterpret_cast<const char*>(frame.rho.data()),
              static_cast<std::streamsize>(frame.rho.size() * sizeof(double)));
    if (!out) throw InvalidArgument("write failed for " + bin.string());
  }
  const auto& g = frame.grid;
  write_json(side, {{"data", bin.filename().string()},
                    {"dtype", "float64"},
                    {"byte_order", std::endian::native == std::endian::little ? "little" : "big"},
                    {"layout", "row-major, x fastest"},
                    {"bounds", {g.xmin, g.xmax, g.ymin, g.ymax}},
                    {"nx", g.nx},
                    {"ny", g.ny},
                    {"T", frame.t}});
  return {bin, side};
}

DensityGrid read_frame(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw InvalidArgument("cannot open " + sidecar.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(sidecar.string() + ": " + e.what());
  }
  const auto b = j.at("bounds");
  GridSpec g{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>(),
             j.at("nx").get<int>(), j.at("ny").get<int>()};
  DensityGrid frame(g, j.at("T").get<double>());
  const auto bin = sidecar.parent_path() / j.at("data").get<std::string>();
  std::ifstream data(bin, std::ios::binary);
  data.read(reinterpret_cast<char*>(frame.rho.data()),
            static_cast<std::streamsize>(frame.rho.size() * sizeof(double)));
  if (!data) throw InvalidArgument("short frame file " + bin.string());
  return frame;
}

nlohmann::json Manifest::to_json() const {
  return {{"tool", tool},
          {"version", version},
          {"subcommand", subcommand},
          {"seed", seed},
          {"config_hash", config_hash()},
          {"config", config},
          {"tolerances", tolerances},
          {"outputs", outputs}};
}

}  // namespace pilotwave::io
