#include "eaem/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "eaem/errors.hpp"

namespace eaem::io {

namespace {

constexpr unsigned max_level = 65535;

std::string next_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] != '#')
      return tok;
    std::string rest;
    std::getline(in, rest);
  }
  throw ConfigurationError("truncated PGM header");
}

unsigned parse_unsigned(const std::string& s, const std::string& what) {
  unsigned v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigurationError("bad " + what + " in PGM file: '" + s + "'");
  return v;
}

} // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& pgm) {
  return std::filesystem::path(pgm.string() + ".json");
}

void write_pgm(const std::filesystem::path& path, const PhaseMap& map, PgmFormat format) {
  map.validate();
  const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  const double step = span > 0.0 ? span / max_level : 1.0;

  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigurationError("cannot write " + path.string());
  out << (format == PgmFormat::ascii ? "P2" : "P5") << "\n"
      << map.width << " " << map.height << "\n"
      << max_level << "\n";
  for (std::size_t y = 0; y < map.height; ++y) {
    for (std::size_t x = 0; x < map.width; ++x) {
      const auto level = static_cast<unsigned>(
          std::clamp(std::lround((map.at(x, y) - lo) / step), 0L, static_cast<long>(max_level)));
      if (format == PgmFormat::ascii) {
        out << level << (x + 1 == map.width ? '\n' : ' ');
      } else {
        out.put(static_cast<char>(level >> 8));
        out.put(static_cast<char>(level & 0xFF));
      }
    }
  }

  nlohmann::json side;
  side["rad_per_level"] = step;
  side["offset_rad"] = lo;
  side["pixel_size_nm"] = map.pixel_size_nm;
  std::ofstream js(sidecar_path(path));
  if (!js)
    throw ConfigurationError("cannot write " + sidecar_path(path).string());
  js << side.dump(2) << "\n";
}

PhaseMap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigurationError("cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P2" && magic != "P5")
    throw ConfigurationError(path.string() + ": not a P2/P5 PGM file");
  const unsigned width = parse_unsigned(next_token(in), "width");
  const unsigned height = parse_unsigned(next_token(in), "height");
  const unsigned maxval = parse_unsigned(next_token(in), "maximum value");
  if (width == 0 || height == 0 || maxval == 0 || maxval > max_level)
    throw ConfigurationError(path.string() + ": unsupported PGM dimensions or depth");

  std::ifstream js(sidecar_path(path));
  if (!js)
    throw ConfigurationError("missing sidecar " + sidecar_path(path).string());
  nlohmann::json side;
  try {
    js >> side;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(sidecar_path(path).string() + ": " + e.what());
  }
  const double step = side.at("rad_per_level").get<double>();
  const double offset = side.at("offset_rad").get<double>();

  PhaseMap map = PhaseMap::zeros(width, height, side.at("pixel_size_nm").get<double>());
  if (magic == "P5")
    in.get(); // single whitespace after maxval
  for (std::size_t i = 0; i < map.size(); ++i) {
    unsigned level = 0;
    if (magic == "P2") {
      level = parse_unsigned(next_token(in), "sample");
    } else if (maxval > 255) {
      const int hi = in.get();
      const int lo = in.get();
      if (!in)
        throw ConfigurationError(path.string() + ": truncated pixel data");
      level = (static_cast<unsigned>(hi) << 8) | static_cast<unsigned>(lo);
    } else {
      const int v = in.get();
      if (!in)
        throw ConfigurationError(path.string() + ": truncated pixel data");
      level = static_cast<unsigned>(v);
    }
    map.values[i] = offset + step * level;
  }
  map.validate();
  return map;
}

void write_csv(const std::filesystem::path& path, const PhaseMap& map) {
  std::ofstream out(path);
  if (!out)
    throw ConfigurationError("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < map.width; ++x)
      out << map.at(x, y) << (x + 1 == map.width ? '\n' : ',');
}

PhaseMap read_csv(const std::filesystem::path& path, double pixel_size_nm) {
  std::ifstream in(path);
  if (!in)
    throw ConfigurationError("cannot open " + path.string());
  PhaseMap map;
  map.pixel_size_nm = pixel_size_nm;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        map.values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigurationError(path.string() + ": cannot parse '" + cell + "'");
      }
      ++count;
    }
    if (map.height == 0)
      map.width = count;
    else if (count != map.width)
      throw ConfigurationError(path.string() + ": ragged rows");
    ++map.height;
  }
  map.validate();
  return map;
}

PhaseMap read_map(const std::filesystem::path& path, double pixel_size_nm) {
  const auto ext = path.extension().string();
  if (ext == ".pgm")
    return read_pgm(path);
  if (ext == ".csv")
    return read_csv(path, pixel_size_nm);
  throw ConfigurationError("phase map must be .pgm or .csv: " + path.string());
}

} // namespace eaem::io
