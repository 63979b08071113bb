#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "rapd/image.hpp"

namespace rapd {

// Frame-pipeline tuning. Window sizes are in pixels of the analyzed frame, so
// they scale with camera resolution through this struct only.
struct DetectionConfig {
  int blur_kernel = 7;
  double blur_sigma = 0.0;  // <= 0 derives kernel/6
  int coarse_threshold = 60;
  int roi_margin = 19;
  int adaptive_window = 63;
  int adaptive_offset = 5;
  int min_contour_points = 8;
  double residual_limit = 2.0;
  // Contour pixels are the centers of the outermost set pixels, which sit
  // about half a pixel inside the true region boundary; this converts the
  // fitted radius back to the boundary. Zero disables the correction.
  double edge_correction_px = 0.5;
};

struct PupilMeasurement {
  double timestamp_ms = 0.0;
  Eye eye = Eye::Left;
  double center_x = 0.0;
  double center_y = 0.0;
  double diameter_px = 0.0;
  double fit_residual = 0.0;  // RMS point-to-circle distance
  bool valid = false;
};

struct CircleFit {
  double center_x = 0.0;
  double center_y = 0.0;
  double diameter = 0.0;
  double residual = 0.0;
};

// Separable Gaussian with edge replication; weights normalized to sum 1, so
// constants pass through unchanged. Output is rounded to 8 bits once, after
// both passes.
inline Frame gaussian_blur(const Frame& f, int kernel, double sigma) {
  if (kernel < 3 || kernel % 2 == 0)
    fail(ErrorCode::InvalidParameter, "blur kernel must be odd and >= 3");
  if (sigma <= 0.0) fail(ErrorCode::InvalidParameter, "blur sigma must be > 0");
  if (!f.geometry_ok()) fail(ErrorCode::InvalidParameter, "frame geometry inconsistent");

  const int r = kernel / 2;
  std::vector<double> w(static_cast<std::size_t>(kernel));
  double sum = 0.0;
  for (int i = 0; i < kernel; ++i) {
    const double d = (i - r) / sigma;
    w[i] = std::exp(-0.5 * d * d);
    sum += w[i];
  }
  for (double& v : w) v /= sum;

  const int W = f.width, H = f.height;
  std::vector<double> tmp(static_cast<std::size_t>(W) * H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kernel; ++k) {
        const int xx = std::clamp(x + k - r, 0, W - 1);
        acc += w[k] * f.at(xx, y);
      }
      tmp[static_cast<std::size_t>(y) * W + x] = acc;
    }
  }
  Frame out = f;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kernel; ++k) {
        const int yy = std::clamp(y + k - r, 0, H - 1);
        acc += w[k] * tmp[static_cast<std::size_t>(yy) * W + x];
      }
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  }
  return out;
}

// Pupils are the darkest structure under IR illumination, so the coarse mask
// keeps pixels strictly below the level.
inline Mask coarse_threshold(const Frame& f, int level) {
  Mask m = make_mask(f.width, f.height);
  const std::size_t n = f.pixels.size();
  for (std::size_t i = 0; i < n; ++i) m.data[i] = f.pixels[i] < level ? 1 : 0;
  return m;
}

namespace detail {

struct Component {
  std::uint64_t intensity_sum = 0;
  std::int64_t count = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// 4-connected component sweep. visit(label, x, y) is called once per pixel in
// deterministic scan order of the seeds.
template <typename Visit>
inline int label_components(const Mask& m, Visit&& visit) {
  const int W = m.width, H = m.height;
  std::vector<std::int32_t> label(static_cast<std::size_t>(W) * H, -1);
  std::vector<PointI> stack;
  int next = 0;
  for (int sy = 0; sy < H; ++sy) {
    for (int sx = 0; sx < W; ++sx) {
      const std::size_t si = static_cast<std::size_t>(sy) * W + sx;
      if (!m.data[si] || label[si] >= 0) continue;
      const int id = next++;
      label[si] = id;
      stack.push_back({sx, sy});
      while (!stack.empty()) {
        const PointI p = stack.back();
        stack.pop_back();
        visit(id, p.x, p.y);
        const PointI nb[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (const PointI& q : nb) {
          if (q.x < 0 || q.y < 0 || q.x >= W || q.y >= H) continue;
          const std::size_t qi = static_cast<std::size_t>(q.y) * W + q.x;
          if (m.data[qi] && label[qi] < 0) {
            label[qi] = id;
            stack.push_back(q);
          }
        }
      }
    }
  }
  return next;
}

}  // namespace detail

// Picks the connected mask component with the lowest mean intensity in the
// blurred frame (the "blackest region"). Ties go to the larger component,
// then to the topmost-leftmost bounding box, so the choice is reproducible.
// Returns the component's bounding box grown by margin and clamped.
inline Roi locate_darkest_region(const Mask& mask, const Frame& blurred, int margin) {
  if (mask.width != blurred.width || mask.height != blurred.height)
    fail(ErrorCode::InvalidParameter, "mask and frame dimensions differ");
  if (margin < 0) fail(ErrorCode::InvalidParameter, "margin must be >= 0");

  std::vector<detail::Component> comps;
  detail::label_components(mask, [&](int id, int x, int y) {
    if (id >= static_cast<int>(comps.size())) {
      detail::Component c;
      c.min_x = c.max_x = x;
      c.min_y = c.max_y = y;
      comps.push_back(c);
    }
    detail::Component& c = comps[static_cast<std::size_t>(id)];
    c.intensity_sum += blurred.at(x, y);
    c.count += 1;
    c.min_x = std::min(c.min_x, x);
    c.max_x = std::max(c.max_x, x);
    c.min_y = std::min(c.min_y, y);
    c.max_y = std::max(c.max_y, y);
  });
  if (comps.empty()) fail(ErrorCode::NoCandidate, "mask has no set pixels");

  // mean(a) < mean(b) compared exactly as sum_a*count_b < sum_b*count_a.
  auto better = [](const detail::Component& a, const detail::Component& b) {
    const auto lhs = static_cast<std::int64_t>(a.intensity_sum) * b.count;
    const auto rhs = static_cast<std::int64_t>(b.intensity_sum) * a.count;
    if (lhs != rhs) return lhs < rhs;
    if (a.count != b.count) return a.count > b.count;
    if (a.min_y != b.min_y) return a.min_y < b.min_y;
    return a.min_x < b.min_x;
  };
  const detail::Component* best = &comps[0];
  for (std::size_t i = 1; i < comps.size(); ++i)
    if (better(comps[i], *best)) best = &comps[i];

  Roi roi;
  roi.x = std::max(0, best->min_x - margin);
  roi.y = std::max(0, best->min_y - margin);
  roi.width = std::min(mask.width, best->max_x + margin + 1) - roi.x;
  roi.height = std::min(mask.height, best->max_y + margin + 1) - roi.y;
  return roi;
}

// Local-mean threshold: a pixel is set iff it is more than `offset` below the
// mean of its window x window neighborhood (edge-replicated). The sums come
// from an integral image over a replicated-padded copy, so the decision is
// exact integer arithmetic: set iff (pix + offset) * window^2 < sum.
inline Mask adaptive_threshold(const Frame& roi_pixels, int window, int offset) {
  if (window < 3 || window % 2 == 0)
    fail(ErrorCode::InvalidParameter, "adaptive window must be odd and >= 3");
  if (!roi_pixels.geometry_ok())
    fail(ErrorCode::InvalidParameter, "frame geometry inconsistent");
  if (window > roi_pixels.width || window > roi_pixels.height)
    fail(ErrorCode::InvalidParameter, "adaptive window exceeds ROI dimensions");

  const int W = roi_pixels.width, H = roi_pixels.height;
  const int r = window / 2;
  const int PW = W + 2 * r, PH = H + 2 * r;

  // integral[y][x] = sum of padded pixels in [0,x) x [0,y)
  std::vector<std::uint64_t> integral(static_cast<std::size_t>(PW + 1) * (PH + 1), 0);
  for (int y = 0; y < PH; ++y) {
    std::uint64_t row = 0;
    for (int x = 0; x < PW; ++x) {
      const int sx = std::clamp(x - r, 0, W - 1);
      const int sy = std::clamp(y - r, 0, H - 1);
      row += roi_pixels.at(sx, sy);
      integral[static_cast<std::size_t>(y + 1) * (PW + 1) + (x + 1)] =
          integral[static_cast<std::size_t>(y) * (PW + 1) + (x + 1)] + row;
    }
  }
  auto window_sum = [&](int x, int y) {
    // window in padded coords covers [x, x+2r] x [y, y+2r]
    const std::size_t x0 = static_cast<std::size_t>(x), y0 = static_cast<std::size_t>(y);
    const std::size_t x1 = x0 + window, y1 = y0 + window;
    return integral[y1 * (PW + 1) + x1] - integral[y0 * (PW + 1) + x1] -
           integral[y1 * (PW + 1) + x0] + integral[y0 * (PW + 1) + x0];
  };

  Mask out = make_mask(W, H);
  const std::int64_t n2 = static_cast<std::int64_t>(window) * window;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::int64_t lhs = (static_cast<std::int64_t>(roi_pixels.at(x, y)) + offset) * n2;
      if (lhs < static_cast<std::int64_t>(window_sum(x, y))) out.at(x, y) = 1;
    }
  }
  return out;
}

// Boundary of the largest 4-connected component: set pixels with at least one
// unset 4-neighbor or lying on the image border, in row-major order.
inline std::vector<PointI> extract_pupil_contour(const Mask& mask) {
  const int W = mask.width, H = mask.height;
  std::vector<std::int64_t> counts;
  std::vector<std::int32_t> label(static_cast<std::size_t>(W) * H, -1);
  detail::label_components(mask, [&](int id, int x, int y) {
    if (id >= static_cast<int>(counts.size())) counts.push_back(0);
    counts[static_cast<std::size_t>(id)] += 1;
    label[static_cast<std::size_t>(y) * W + x] = id;
  });
  if (counts.empty()) fail(ErrorCode::NoContour, "mask has no set pixels");

  int best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = static_cast<int>(i);  // tie: earlier seed wins

  std::vector<PointI> contour;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (label[static_cast<std::size_t>(y) * W + x] != best) continue;
      const bool border = x == 0 || y == 0 || x == W - 1 || y == H - 1;
      if (border || !mask.at(x - 1, y) || !mask.at(x + 1, y) || !mask.at(x, y - 1) ||
          !mask.at(x, y + 1))
        contour.push_back({x, y});
    }
  }
  return contour;
}

// Algebraic least-squares circle (minimize sum of (x^2+y^2+Ax+By+C)^2).
// Coordinates are centered on the centroid first, which decouples C and makes
// the collinearity test a 2x2 determinant. The reported residual is the RMS
// geometric distance |dist - radius|.
inline CircleFit fit_circle(const std::vector<PointI>& points, int min_points = 8) {
  if (static_cast<int>(points.size()) < std::max(3, min_points))
    fail(ErrorCode::DegenerateGeometry,
         "need at least " + std::to_string(std::max(3, min_points)) + " points");

  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const PointI& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;

  double sxx = 0.0, sxy = 0.0, syy = 0.0, sxz = 0.0, syz = 0.0, sz = 0.0;
  for (const PointI& p : points) {
    const double x = p.x - mx, y = p.y - my;
    const double z = x * x + y * y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    sxz += x * z;
    syz += y * z;
    sz += z;
  }
  const double det = sxx * syy - sxy * sxy;
  const double scale = sxx + syy;
  if (!(det > 1e-9 * scale * scale))
    fail(ErrorCode::DegenerateGeometry, "points are collinear or ill-conditioned");

  const double a = (-sxz * syy + syz * sxy) / det;  // x-coefficient
  const double b = (-syz * sxx + sxz * sxy) / det;  // y-coefficient
  const double c = -sz / n;
  const double radicand = 0.25 * (a * a + b * b) - c;
  if (!(radicand > 0.0)) fail(ErrorCode::DegenerateGeometry, "non-positive fitted radius");

  CircleFit fit;
  const double cx = -a / 2.0, cy = -b / 2.0;
  const double radius = std::sqrt(radicand);
  fit.center_x = cx + mx;
  fit.center_y = cy + my;
  fit.diameter = 2.0 * radius;

  double acc = 0.0;
  for (const PointI& p : points) {
    const double d = std::hypot(p.x - mx - cx, p.y - my - cy) - radius;
    acc += d * d;
  }
  fit.residual = std::sqrt(acc / n);
  return fit;
}

// Full Fig.-style pipeline for one frame. Stage failures (blink, blank frame,
// washed-out ROI) fold into valid=false; a session must keep running through
// them. The adaptive stage reads the original frame's ROI, not the blurred
// one.
inline PupilMeasurement detect_pupil(const Frame& frame, const DetectionConfig& cfg) {
  if (!frame.geometry_ok() || frame.width < 32 || frame.height < 32)
    fail(ErrorCode::InvalidParameter, "frame must be at least 32x32 with matching pixel count");
  // Config mistakes are caller bugs and must not masquerade as blinks.
  if (cfg.blur_kernel < 3 || cfg.blur_kernel % 2 == 0)
    fail(ErrorCode::InvalidParameter, "blur kernel must be odd and >= 3");
  if (cfg.adaptive_window < 3 || cfg.adaptive_window % 2 == 0)
    fail(ErrorCode::InvalidParameter, "adaptive window must be odd and >= 3");
  if (cfg.roi_margin < 0) fail(ErrorCode::InvalidParameter, "roi margin must be >= 0");
  if (cfg.min_contour_points < 3)
    fail(ErrorCode::InvalidParameter, "min contour points must be >= 3");

  PupilMeasurement m;
  m.timestamp_ms = frame.timestamp_ms;
  m.eye = frame.eye;

  const double sigma = cfg.blur_sigma > 0.0 ? cfg.blur_sigma : cfg.blur_kernel / 6.0;
  try {
    const Frame blurred = gaussian_blur(frame, cfg.blur_kernel, sigma);
    const Mask coarse = coarse_threshold(blurred, cfg.coarse_threshold);
    const Roi roi = locate_darkest_region(coarse, blurred, cfg.roi_margin);
    const Frame roi_img = crop(frame, roi);
    const Mask fine = adaptive_threshold(roi_img, cfg.adaptive_window, cfg.adaptive_offset);
    const std::vector<PointI> contour = extract_pupil_contour(fine);
    const CircleFit fit = fit_circle(contour, cfg.min_contour_points);

    m.center_x = fit.center_x + roi.x;
    m.center_y = fit.center_y + roi.y;
    m.diameter_px = fit.diameter + 2.0 * cfg.edge_correction_px;
    m.fit_residual = fit.residual;
    const bool center_inside = m.center_x >= 0.0 && m.center_x < frame.width &&
                               m.center_y >= 0.0 && m.center_y < frame.height;
    m.valid = m.diameter_px > 0.0 && center_inside && m.fit_residual <= cfg.residual_limit;
  } catch (const Error&) {
    m = PupilMeasurement{};
    m.timestamp_ms = frame.timestamp_ms;
    m.eye = frame.eye;
  }
  return m;
}

}  // namespace rapd
