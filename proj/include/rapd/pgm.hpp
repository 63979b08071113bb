#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "rapd/image.hpp"

namespace rapd {

namespace detail {

// Reads the next ASCII integer from a PNM header, skipping whitespace and
// '#' comment lines.
inline long pnm_header_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c))
    fail(ErrorCode::ParseError, path + ": malformed PGM header");
  long value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1000000) fail(ErrorCode::ParseError, path + ": absurd PGM header value");
    c = in.get();
  }
  if (c != EOF) in.unget();
  return value;
}

}  // namespace detail

// Binary 8-bit PGM (P5, maxval 255) is the only frame container. The caller
// fills in timestamp and eye side from the session manifest.
inline Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, path.string() + ": cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    fail(ErrorCode::ParseError, path.string() + ": not a binary PGM (P5)");
  const long width = detail::pnm_header_int(in, path.string());
  const long height = detail::pnm_header_int(in, path.string());
  const long maxval = detail::pnm_header_int(in, path.string());
  if (maxval != 255)
    fail(ErrorCode::ParseError, path.string() + ": maxval must be 255");
  in.get();  // single whitespace byte before the raster
  Frame f;
  f.width = static_cast<int>(width);
  f.height = static_cast<int>(height);
  f.pixels.resize(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(f.pixels.data()),
          static_cast<std::streamsize>(f.pixels.size()));
  if (!in) fail(ErrorCode::ParseError, path.string() + ": truncated PGM raster");
  return f;
}

inline void write_pgm(const std::filesystem::path& path, const Frame& f) {
  if (!f.geometry_ok()) fail(ErrorCode::InvalidParameter, "frame geometry inconsistent");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::ParseError, path.string() + ": cannot open for writing");
  out << "P5\n" << f.width << " " << f.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.pixels.data()),
            static_cast<std::streamsize>(f.pixels.size()));
  if (!out) fail(ErrorCode::ParseError, path.string() + ": write failed");
}

}  // namespace rapd
