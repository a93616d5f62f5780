#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "pilotwave/errors.hpp"
#include "pilotwave/io.hpp"
#include "pilotwave/rng.hpp"

using namespace pilotwave;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  auto d = fs::temp_directory_path() / ("pilotwave_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("shortest round-trip doubles") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1e-8) == "1e-08");
  CHECK(io::format_double(-2.0) == "-2");
  CHECK(io::format_double(0.0) == "0");
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  Rng rng(3);
  for (int k = 0; k < 20000; ++k) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.uniform(-300, 300)));
    const auto s = io::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
    // %.17g always round-trips, so shortest can never be longer.
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    CHECK(s.size() <= std::string(buf).size());
  }
}

TEST_CASE("FNV-1a digests") {
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(io::fnv1a_hex("foobar") == "85944171f73967e8");
  io::Manifest a, b;
  a.config = b.config = "m=2\nn=10\n";
  CHECK(a.config_hash() == b.config_hash());
  b.config += "seed=1\n";
  CHECK(a.config_hash() != b.config_hash());
  const auto j = a.to_json();
  CHECK(j.at("config_hash") == a.config_hash());
  CHECK(!j.contains("timestamp"));
}

TEST_CASE("RFC-4180 CSV") {
  CHECK(io::csv_escape("plain") == "plain");
  CHECK(io::csv_escape("a,b") == "\"a,b\"");
  CHECK(io::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(io::csv_escape("two\nlines") == "\"two\nlines\"");

  const auto dir = scratch_dir();
  const auto path = dir / "t.csv";
  {
    io::CsvWriter csv(path, {"x", "label", "count"});
    csv.row({0.1, std::string("a,b"), 3LL});
    csv.row({-1e300, std::string(""), -7LL});
    CHECK_THROWS_AS(csv.row({1.0}), InvalidArgument);
  }
  CHECK(slurp(path) == "x,label,count\r\n0.1,\"a,b\",3\r\n-1e+300,,-7\r\n");
  CHECK_THROWS_AS(io::CsvWriter(dir / "missing" / "t.csv", {"x"}), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("binary frames") {
  const auto dir = scratch_dir();
  DensityGrid f(GridSpec{-2.0, 2.0, -1.0, 3.0, 5, 3}, 1.25);
  for (std::size_t k = 0; k < f.rho.size(); ++k) f.rho[k] = 0.1 * static_cast<double>(k) + 1e-17;
  const auto paths = io::write_frame(dir / "frame", f);
  REQUIRE(paths.size() == 2);
  CHECK(fs::file_size(paths[0]) == f.rho.size() * sizeof(double));
  const auto side = nlohmann::json::parse(slurp(paths[1]));
  CHECK(side.at("nx") == 5);
  CHECK(side.at("ny") == 3);
  CHECK(side.at("T") == 1.25);
  CHECK(side.at("bounds") == nlohmann::json({-2.0, 2.0, -1.0, 3.0}));
  const auto back = io::read_frame(paths[1]);
  CHECK(back.rho == f.rho);
  CHECK(back.t == f.t);
  CHECK(back.grid.ymax == 3.0);
  fs::remove_all(dir);
}
