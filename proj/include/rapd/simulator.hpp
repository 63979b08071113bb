#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rapd/scoring.hpp"
#include "rapd/session.hpp"

namespace rapd {

// First-order pupil light reflex dynamics. An afferent defect is a gain on
// the stimulated-eye drive and attenuates BOTH pupils (the efferent paths
// stay intact), which is exactly the asymmetry the swinging test measures.
struct PlrParams {
  double baseline_diameter_mm = 6.0;
  double constriction_fraction = 0.35;  // depth at full drive
  double latency_ms = 250.0;
  double tau_constrict_ms = 400.0;
  double tau_redilate_ms = 1200.0;
  double afferent_gain_left = 1.0;
  double afferent_gain_right = 1.0;
  std::array<double, 4> color_gain = {1.0, 1.0, 1.0, 1.0};  // indexed by LedColor
  double noise_sd_mm = 0.0;        // measurement jitter on rendered diameters
  double hippus_amplitude_mm = 0.0;
  double hippus_freq_hz = 0.2;

  double gain_for(Eye stimulated) const {
    return stimulated == Eye::Left ? afferent_gain_left : afferent_gain_right;
  }
};

inline void validate_params(const PlrParams& p) {
  if (p.baseline_diameter_mm <= 0.0)
    fail(ErrorCode::InvalidParameter, "baseline diameter must be > 0");
  if (p.constriction_fraction <= 0.0 || p.constriction_fraction >= 1.0)
    fail(ErrorCode::InvalidParameter, "constriction fraction must be in (0,1)");
  if (p.tau_constrict_ms <= 0.0 || p.tau_redilate_ms <= 0.0)
    fail(ErrorCode::InvalidParameter, "time constants must be > 0");
  if (p.latency_ms < 0.0) fail(ErrorCode::InvalidParameter, "latency must be >= 0");
  for (double g : {p.afferent_gain_left, p.afferent_gain_right})
    if (g < 0.0 || g > 1.0) fail(ErrorCode::InvalidParameter, "afferent gains must be in [0,1]");
  for (double g : p.color_gain)
    if (g < 0.0 || g > 1.0) fail(ErrorCode::InvalidParameter, "color gains must be in [0,1]");
  if (p.noise_sd_mm < 0.0 || p.hippus_amplitude_mm < 0.0 || p.hippus_freq_hz < 0.0)
    fail(ErrorCode::InvalidParameter, "noise and hippus parameters must be >= 0");
}

// Piecewise-exponential solution of dD/dt = (target - D)/tau with a
// stimulus-dependent target. Both eyes follow the same drive (consensual
// reflex), so the trace is shared.
class PlrModel {
 public:
  PlrModel(const PlrParams& params, const StimulusProtocol& protocol) : params_(params) {
    validate_params(params);
    if (!protocol_is_valid(protocol))
      fail(ErrorCode::InvalidParameter, "protocol is not valid");
    const double base = params.baseline_diameter_mm;
    double t = 0.0, d = base;
    for (const StimulusEvent& e : protocol.events) {
      const double drive =
          params.constriction_fraction * e.intensity *
          params.color_gain[static_cast<std::size_t>(e.color)] * params.gain_for(e.eye);
      const double target = base * (1.0 - drive);
      const double on = e.t_on_ms + params.latency_ms;
      const double off = e.t_off_ms + params.latency_ms;
      d = push_segment(t, on, base, params.tau_redilate_ms, d);
      d = push_segment(on, off, target, params.tau_constrict_ms, d);
      t = off;
    }
    segments_.push_back({t, base, params.tau_redilate_ms, d});
  }

  // Noise-free diameter at t, identical for both eyes.
  double diameter_mm(double t_ms) const {
    const Segment* seg = &segments_.front();
    for (const Segment& s : segments_) {
      if (s.start_ms > t_ms) break;
      seg = &s;
    }
    const double decay = std::exp(-(t_ms - seg->start_ms) / seg->tau_ms);
    double d = seg->target_mm + (seg->start_value_mm - seg->target_mm) * decay;
    if (params_.hippus_amplitude_mm > 0.0)
      d += params_.hippus_amplitude_mm *
           std::sin(2.0 * std::numbers::pi * params_.hippus_freq_hz * t_ms / 1000.0);
    return d;
  }

 private:
  struct Segment {
    double start_ms;
    double target_mm;
    double tau_ms;
    double start_value_mm;
  };

  double push_segment(double from, double to, double target, double tau, double d0) {
    if (to <= from) return d0;  // zero-length dark gap
    segments_.push_back({from, target, tau, d0});
    return target + (d0 - target) * std::exp(-(to - from) / tau);
  }

  PlrParams params_;
  std::vector<Segment> segments_;
};

inline double plr_diameter(double t_ms, Eye /*eye*/, const PlrParams& params,
                           const StimulusProtocol& protocol) {
  return PlrModel(params, protocol).diameter_mm(t_ms);
}

// --- deterministic noise -------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream seeded from (seed, t, eye, salt): every frame owns an independent,
// reproducible noise stream regardless of render order.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, double t_ms, Eye eye, std::uint64_t salt) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof t_ms);
    std::memcpy(&bits, &t_ms, sizeof bits);
    state_ = seed;
    (void)splitmix64(state_);
    state_ ^= bits;
    (void)splitmix64(state_);
    state_ ^= (eye == Eye::Right ? 0x52ULL : 0x4cULL) ^ (salt << 8);
    (void)splitmix64(state_);
  }

  double uniform() {  // (0,1]
    return (splitmix64(state_) >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace detail

// --- rendering -------------------------------------------------------------

struct GlintSpec {
  double offset_x_px = 20.0;
  double offset_y_px = -20.0;
  double radius_px = 2.0;
  int level = 250;
};

// IR-style eye raster: bright sclera, mid iris, dark pupil, all concentric,
// with a skin-toned eyelid that closes from the top. Levels must satisfy
// pupil < iris < sclera.
struct RenderConfig {
  int width = 64;
  int height = 64;
  double mm_to_px = 8.0;
  double iris_diameter_mm = 12.0;
  int sclera_level = 180;
  int iris_level = 100;
  int pupil_level = 25;
  int eyelid_level = 150;
  double pixel_noise_sd = 0.0;
  std::optional<GlintSpec> glint;
};

inline void validate_render_config(const RenderConfig& c) {
  if (c.width < 32 || c.height < 32)
    fail(ErrorCode::InvalidParameter, "render target must be at least 32x32");
  if (c.mm_to_px <= 0.0) fail(ErrorCode::InvalidParameter, "mm_to_px must be > 0");
  if (!(c.pupil_level < c.iris_level && c.iris_level < c.sclera_level))
    fail(ErrorCode::InvalidParameter, "levels must satisfy pupil < iris < sclera");
  if (c.pixel_noise_sd < 0.0) fail(ErrorCode::InvalidParameter, "pixel noise must be >= 0");
}

// One eye frame. blink_cover in [0,1] is the fraction of the iris height the
// eyelid covers from the top. Identical inputs give bit-identical frames.
inline Frame render_frame(double diameter_px, const RenderConfig& cfg, double blink_cover,
                          std::uint64_t seed, double t_ms, Eye eye) {
  validate_render_config(cfg);
  const double iris_px = cfg.iris_diameter_mm * cfg.mm_to_px;
  if (diameter_px <= 0.0) fail(ErrorCode::InvalidParameter, "pupil diameter must be > 0");
  if (diameter_px >= iris_px)
    fail(ErrorCode::InvalidParameter, "pupil diameter must be smaller than the iris");
  if (blink_cover < 0.0 || blink_cover > 1.0)
    fail(ErrorCode::InvalidParameter, "blink_cover must be in [0,1]");

  const double cx = (cfg.width - 1) / 2.0;
  const double cy = (cfg.height - 1) / 2.0;
  const double pupil_r = diameter_px / 2.0;
  const double iris_r = iris_px / 2.0;
  const double lid_edge = (cy - iris_r) + blink_cover * iris_px;  // lid bottom in y

  // 1 px linear ramp across every boundary; the midpoint sits exactly on the
  // geometric radius.
  auto mix = [](double a, double b, double u) { return a + (b - a) * u; };
  auto edge = [](double d, double r) { return std::clamp(d - r + 0.5, 0.0, 1.0); };

  Frame f = make_frame(cfg.width, cfg.height, 0, t_ms, eye);
  detail::NoiseStream noise(seed, t_ms, eye, /*salt=*/1);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      double v = mix(static_cast<double>(cfg.iris_level),
                     static_cast<double>(cfg.sclera_level), edge(d, iris_r));
      v = mix(static_cast<double>(cfg.pupil_level), v, edge(d, pupil_r));
      if (cfg.glint) {
        const double dg =
            std::hypot(x - cx - cfg.glint->offset_x_px, y - cy - cfg.glint->offset_y_px);
        v = mix(static_cast<double>(cfg.glint->level), v, edge(dg, cfg.glint->radius_px));
      }
      if (blink_cover > 0.0) {
        const double covered = std::clamp(lid_edge - y + 0.5, 0.0, 1.0);
        v = mix(v, static_cast<double>(cfg.eyelid_level), covered);
      }
      if (cfg.pixel_noise_sd > 0.0) v += cfg.pixel_noise_sd * noise.normal();
      f.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return f;
}

// --- sessions ----------------------------------------------------------------

struct BlinkEvent {
  double start_ms = 0.0;
  double duration_ms = 0.0;
};

// Non-overlapping eyelid closures per eye. The lid ramps shut over 60 ms and
// reopens over 100 ms (capped at a third of the closure each), which yields a
// few partially-occluded frames on each side of the gap.
struct BlinkSchedule {
  std::vector<BlinkEvent> left;
  std::vector<BlinkEvent> right;

  static double cover_at(const std::vector<BlinkEvent>& events, double t_ms) {
    for (const BlinkEvent& b : events) {
      const double u = t_ms - b.start_ms;
      if (u < 0.0 || u >= b.duration_ms) continue;
      const double close = std::min(60.0, b.duration_ms / 3.0);
      const double open = std::min(100.0, b.duration_ms / 3.0);
      if (u < close) return u / close;
      if (u > b.duration_ms - open) return (b.duration_ms - u) / open;
      return 1.0;
    }
    return 0.0;
  }

  double cover(Eye eye, double t_ms) const {
    return cover_at(eye == Eye::Left ? left : right, t_ms);
  }
};

// Noise-free reference the acceptance tests score against.
struct GroundTruth {
  std::vector<double> timestamps_ms;
  std::vector<double> left_diameter_mm, right_diameter_mm;
  std::vector<double> left_diameter_px, right_diameter_px;
  std::vector<double> true_magnitudes_right, true_magnitudes_left;  // by stimulated eye
  std::optional<double> true_score;  // empty when a median is not positive
};

struct SimulatedSession {
  SessionManifest manifest;
  std::vector<Frame> left_frames;
  std::vector<Frame> right_frames;
  GroundTruth truth;
};

namespace detail {

// Windowed rest-mean / constriction-min magnitudes over a sampled noise-free
// trace; the same estimator the analysis pipeline applies to measurements.
inline void true_magnitudes(const std::vector<double>& timestamps,
                            const std::vector<double>& diameters,
                            const StimulusProtocol& protocol, const WindowConfig& wcfg,
                            std::vector<double>& out_right, std::vector<double>& out_left) {
  const std::vector<AnalysisWindow> windows =
      stimulation_windows(protocol, wcfg.rest_lead_ms, wcfg.constriction_tail_ms);
  for (const AnalysisWindow& w : windows) {
    if (w.degenerate_rest) continue;
    double rest_sum = 0.0;
    std::size_t rest_n = 0;
    double con_min = std::numeric_limits<double>::infinity();
    bool con_found = false;
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
      const double t = timestamps[i];
      if (t >= w.rest_start_ms && t < w.rest_end_ms) {
        rest_sum += diameters[i];
        ++rest_n;
      }
      if (t >= w.constriction_start_ms && t < w.constriction_end_ms) {
        con_min = std::min(con_min, diameters[i]);
        con_found = true;
      }
    }
    if (rest_n == 0 || !con_found) continue;
    const double rest = rest_sum / static_cast<double>(rest_n);
    const double magnitude = (rest - con_min) / rest * 100.0;
    (w.stimulated_eye == Eye::Right ? out_right : out_left).push_back(magnitude);
  }
}

}  // namespace detail

// Renders both eyes over [0, session_end) at frame_rate and derives the
// noise-free ground truth with the same window rules the scorer uses.
inline SimulatedSession simulate_session(const StimulusProtocol& protocol,
                                         const PlrParams& params, const RenderConfig& render_cfg,
                                         const BlinkSchedule& blinks, double frame_rate_hz,
                                         std::uint64_t seed,
                                         const WindowConfig& window_cfg = {}) {
  if (frame_rate_hz <= 0.0) fail(ErrorCode::InvalidParameter, "frame rate must be > 0");
  validate_render_config(render_cfg);
  for (const std::vector<BlinkEvent>* side : {&blinks.left, &blinks.right})
    for (std::size_t i = 1; i < side->size(); ++i)
      if ((*side)[i].start_ms < (*side)[i - 1].start_ms + (*side)[i - 1].duration_ms)
        fail(ErrorCode::InvalidParameter, "blink events overlap");

  const PlrModel model(params, protocol);
  const double period_ms = 1000.0 / frame_rate_hz;
  const auto frame_count =
      static_cast<std::size_t>(std::floor(protocol.session_end_ms / period_ms * (1.0 + 1e-12)));

  SimulatedSession s;
  s.manifest.session_id = "sim-" + std::to_string(seed);
  s.manifest.protocol = protocol;
  s.manifest.frame_rate_hz = frame_rate_hz;
  s.truth.timestamps_ms.reserve(frame_count);

  char name[32];
  for (std::size_t k = 0; k < frame_count; ++k) {
    const double t = k * period_ms;
    const double d_mm = model.diameter_mm(t);
    s.truth.timestamps_ms.push_back(t);
    s.truth.left_diameter_mm.push_back(d_mm);
    s.truth.right_diameter_mm.push_back(d_mm);
    s.truth.left_diameter_px.push_back(d_mm * render_cfg.mm_to_px);
    s.truth.right_diameter_px.push_back(d_mm * render_cfg.mm_to_px);

    for (const Eye eye : {Eye::Left, Eye::Right}) {
      double d_render_mm = d_mm;
      if (params.noise_sd_mm > 0.0) {
        detail::NoiseStream jitter(seed, t, eye, /*salt=*/2);
        d_render_mm += params.noise_sd_mm * jitter.normal();
      }
      const double cover = blinks.cover(eye, t);
      Frame f = render_frame(d_render_mm * render_cfg.mm_to_px, render_cfg, cover, seed, t, eye);
      std::snprintf(name, sizeof name, "%s/%06zu.pgm", eye == Eye::Left ? "left" : "right", k);
      (eye == Eye::Left ? s.manifest.left_frames : s.manifest.right_frames)
          .push_back({name, t});
      (eye == Eye::Left ? s.left_frames : s.right_frames).push_back(std::move(f));
    }
  }

  detail::true_magnitudes(s.truth.timestamps_ms, s.truth.right_diameter_px, protocol,
                          window_cfg, s.truth.true_magnitudes_right,
                          s.truth.true_magnitudes_left);
  if (!s.truth.true_magnitudes_right.empty() && !s.truth.true_magnitudes_left.empty()) {
    const double mr = median(s.truth.true_magnitudes_right);
    const double ml = median(s.truth.true_magnitudes_left);
    if (mr > 0.0 && ml > 0.0) s.truth.true_score = 10.0 * std::log10(mr / ml);
  }
  return s;
}

// Analytic oracle: the score implied by the noise-free dynamics alone,
// sampled densely enough that discretization is negligible.
inline double expected_rapd(const PlrParams& params, const StimulusProtocol& protocol,
                            const WindowConfig& window_cfg = {},
                            double sample_rate_hz = 1000.0) {
  if (sample_rate_hz <= 0.0) fail(ErrorCode::InvalidParameter, "sample rate must be > 0");
  const PlrModel model(params, protocol);
  const double period_ms = 1000.0 / sample_rate_hz;
  const auto n = static_cast<std::size_t>(
      std::floor(protocol.session_end_ms / period_ms * (1.0 + 1e-12)));
  std::vector<double> ts(n), ds(n);
  for (std::size_t k = 0; k < n; ++k) {
    ts[k] = k * period_ms;
    ds[k] = model.diameter_mm(ts[k]);
  }
  std::vector<double> right, left;
  detail::true_magnitudes(ts, ds, protocol, window_cfg, right, left);
  return compute_rapd(right, left);
}

inline json ground_truth_to_json(const GroundTruth& g) {
  json j = {{"schema_version", 1},
            {"timestamps_ms", g.timestamps_ms},
            {"left_diameter_mm", g.left_diameter_mm},
            {"right_diameter_mm", g.right_diameter_mm},
            {"left_diameter_px", g.left_diameter_px},
            {"right_diameter_px", g.right_diameter_px},
            {"true_magnitudes_right", g.true_magnitudes_right},
            {"true_magnitudes_left", g.true_magnitudes_left}};
  j["true_score"] = g.true_score ? json(*g.true_score) : json(nullptr);
  return j;
}

// Writes frames, manifest.json and ground_truth.json under session_dir.
inline void save_session(const std::filesystem::path& session_dir, const SimulatedSession& s) {
  namespace fs = std::filesystem;
  fs::create_directories(session_dir / "left");
  fs::create_directories(session_dir / "right");
  for (std::size_t i = 0; i < s.left_frames.size(); ++i)
    write_pgm(session_dir / s.manifest.left_frames[i].path, s.left_frames[i]);
  for (std::size_t i = 0; i < s.right_frames.size(); ++i)
    write_pgm(session_dir / s.manifest.right_frames[i].path, s.right_frames[i]);
  write_manifest(session_dir, s.manifest);
  std::ofstream out(session_dir / "ground_truth.json", std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::ParseError, "cannot write ground_truth.json");
  out << canonical_dump(ground_truth_to_json(s.truth));
}

}  // namespace rapd
