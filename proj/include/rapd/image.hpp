#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rapd/common.hpp"

namespace rapd {

// 8-bit grayscale frame, row-major, tagged with capture time and eye side.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  double timestamp_ms = 0.0;
  Eye eye = Eye::Left;

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  bool geometry_ok() const {
    return width > 0 && height > 0 &&
           pixels.size() == static_cast<std::size_t>(width) * height;
  }
};

inline Frame make_frame(int width, int height, std::uint8_t fill, double timestamp_ms = 0.0,
                        Eye eye = Eye::Left) {
  Frame f;
  f.width = width;
  f.height = height;
  f.pixels.assign(static_cast<std::size_t>(width) * height, fill);
  f.timestamp_ms = timestamp_ms;
  f.eye = eye;
  return f;
}

// Binary mask with the same layout as Frame; values are 0 or 1.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

inline Mask make_mask(int width, int height, std::uint8_t fill = 0) {
  Mask m;
  m.width = width;
  m.height = height;
  m.data.assign(static_cast<std::size_t>(width) * height, fill);
  return m;
}

struct Roi {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool inside(int frame_width, int frame_height) const {
    return x >= 0 && y >= 0 && width > 0 && height > 0 &&
           x + width <= frame_width && y + height <= frame_height;
  }
};

struct PointI {
  int x = 0;
  int y = 0;
};

inline Frame crop(const Frame& f, const Roi& roi) {
  if (!roi.inside(f.width, f.height))
    fail(ErrorCode::InvalidParameter, "crop region outside frame");
  Frame out;
  out.width = roi.width;
  out.height = roi.height;
  out.timestamp_ms = f.timestamp_ms;
  out.eye = f.eye;
  out.pixels.resize(static_cast<std::size_t>(roi.width) * roi.height);
  for (int y = 0; y < roi.height; ++y) {
    const std::uint8_t* src = f.pixels.data() + static_cast<std::size_t>(roi.y + y) * f.width + roi.x;
    std::uint8_t* dst = out.pixels.data() + static_cast<std::size_t>(y) * roi.width;
    std::copy(src, src + roi.width, dst);
  }
  return out;
}

}  // namespace rapd
