#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rapd/scoring.hpp"
#include "rapd/session.hpp"

namespace rapd {

constexpr int kReportSchemaVersion = 1;

struct AnalysisConfig {
  DetectionConfig detection;
  TraceConfig trace;
  WindowConfig windows;
};

struct EyeSummary {
  std::size_t sample_count = 0;
  std::size_t valid_count = 0;          // valid straight out of detection
  double valid_fraction = 0.0;
  std::size_t interpolated_count = 0;   // samples reconstructed by interpolation
};

// Everything needed to audit or reproduce a run: the score with per-window
// magnitudes plus a complete echo of the configuration that produced it.
struct ResultsReport {
  int schema_version = kReportSchemaVersion;
  std::string session_id;
  EyeSummary left_eye;
  EyeSummary right_eye;
  RapdResult rapd;
  AnalysisConfig config;
};

// Traces at every pipeline stage, kept for CSV export and plotting.
struct TraceBundle {
  DiameterTrace raw;
  DiameterTrace flagged;
  DiameterTrace interpolated;
  DiameterTrace filtered;
};

struct AnalysisOutput {
  ResultsReport report;
  StimulusProtocol protocol;
  TraceBundle left;
  TraceBundle right;
};

// --- config JSON ------------------------------------------------------------

inline json config_to_json(const AnalysisConfig& c) {
  return {{"detection",
           {{"blur_kernel", c.detection.blur_kernel},
            {"blur_sigma", c.detection.blur_sigma},
            {"coarse_threshold", c.detection.coarse_threshold},
            {"roi_margin", c.detection.roi_margin},
            {"adaptive_window", c.detection.adaptive_window},
            {"adaptive_offset", c.detection.adaptive_offset},
            {"min_contour_points", c.detection.min_contour_points},
            {"residual_limit", c.detection.residual_limit},
            {"edge_correction_px", c.detection.edge_correction_px}}},
          {"trace",
           {{"max_jump_fraction", c.trace.max_jump_fraction},
            {"lowpass_cutoff_hz", c.trace.lowpass_cutoff_hz},
            {"max_gap_ms", c.trace.max_gap_ms}}},
          {"windows",
           {{"rest_lead_ms", c.windows.rest_lead_ms},
            {"constriction_tail_ms", c.windows.constriction_tail_ms}}}};
}

// Partial overrides are allowed; unknown keys are rejected so typos cannot
// silently fall back to defaults.
inline AnalysisConfig config_from_json(const json& j, AnalysisConfig base = {}) {
  auto set_num = [](const json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj[key].get<std::decay_t<decltype(field)>>();
  };
  auto check_keys = [](const json& obj, std::initializer_list<const char*> known,
                       const char* section) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* k : known)
        if (it.key() == k) ok = true;
      if (!ok)
        fail(ErrorCode::ParseError,
             std::string("unknown config key '") + it.key() + "' in " + section);
    }
  };
  check_keys(j, {"detection", "trace", "windows"}, "config");
  if (j.contains("detection")) {
    const json& d = j["detection"];
    check_keys(d,
               {"blur_kernel", "blur_sigma", "coarse_threshold", "roi_margin",
                "adaptive_window", "adaptive_offset", "min_contour_points", "residual_limit",
                "edge_correction_px"},
               "config.detection");
    set_num(d, "blur_kernel", base.detection.blur_kernel);
    set_num(d, "blur_sigma", base.detection.blur_sigma);
    set_num(d, "coarse_threshold", base.detection.coarse_threshold);
    set_num(d, "roi_margin", base.detection.roi_margin);
    set_num(d, "adaptive_window", base.detection.adaptive_window);
    set_num(d, "adaptive_offset", base.detection.adaptive_offset);
    set_num(d, "min_contour_points", base.detection.min_contour_points);
    set_num(d, "residual_limit", base.detection.residual_limit);
    set_num(d, "edge_correction_px", base.detection.edge_correction_px);
  }
  if (j.contains("trace")) {
    const json& t = j["trace"];
    check_keys(t, {"max_jump_fraction", "lowpass_cutoff_hz", "max_gap_ms"}, "config.trace");
    set_num(t, "max_jump_fraction", base.trace.max_jump_fraction);
    set_num(t, "lowpass_cutoff_hz", base.trace.lowpass_cutoff_hz);
    set_num(t, "max_gap_ms", base.trace.max_gap_ms);
  }
  if (j.contains("windows")) {
    const json& w = j["windows"];
    check_keys(w, {"rest_lead_ms", "constriction_tail_ms"}, "config.windows");
    set_num(w, "rest_lead_ms", base.windows.rest_lead_ms);
    set_num(w, "constriction_tail_ms", base.windows.constriction_tail_ms);
  }
  return base;
}

// --- pipeline ----------------------------------------------------------------

namespace detail {

inline TraceBundle process_eye(const std::filesystem::path& dir,
                               const std::vector<FrameRef>& refs, Eye eye,
                               double frame_rate_hz, const AnalysisConfig& cfg,
                               EyeSummary& summary) {
  std::vector<PupilMeasurement> measurements;
  measurements.reserve(refs.size());
  for (const FrameRef& ref : refs)
    measurements.push_back(detect_pupil(load_frame(dir, ref, eye), cfg.detection));

  TraceBundle bundle;
  bundle.raw = assemble_trace(measurements, eye, frame_rate_hz);

  summary.sample_count = bundle.raw.samples.size();
  for (const TraceSample& s : bundle.raw.samples)
    if (s.valid) ++summary.valid_count;
  summary.valid_fraction = summary.sample_count == 0
                               ? 0.0
                               : static_cast<double>(summary.valid_count) /
                                     static_cast<double>(summary.sample_count);
  if (summary.valid_count < 2)
    fail(ErrorCode::TooSparse,
         std::string(to_string(eye)) + " eye: no usable windows (" +
             std::to_string(summary.valid_count) + " of " +
             std::to_string(summary.sample_count) + " frames yielded a valid pupil)");

  bundle.flagged = flag_artifacts(bundle.raw, cfg.trace);
  try {
    bundle.interpolated = interpolate_gaps(bundle.flagged, cfg.trace);
    bundle.filtered = low_pass(bundle.interpolated, cfg.trace);
  } catch (const Error& e) {
    fail(e.code(), std::string(to_string(eye)) + " eye: " + e.what());
  }
  for (std::size_t i = 0; i < bundle.interpolated.samples.size(); ++i)
    if (bundle.interpolated.samples[i].valid && !bundle.flagged.samples[i].valid)
      ++summary.interpolated_count;
  return bundle;
}

}  // namespace detail

// Runs the whole pipeline on a session directory: detect every frame,
// assemble and clean both traces, score. Deterministic for fixed inputs.
inline AnalysisOutput analyze_session(const std::filesystem::path& session_dir,
                                      const AnalysisConfig& cfg = {}) {
  const SessionManifest manifest = read_session(session_dir);

  AnalysisOutput out;
  out.protocol = manifest.protocol;
  out.report.session_id = manifest.session_id;
  out.report.config = cfg;
  out.left = detail::process_eye(session_dir, manifest.left_frames, Eye::Left,
                                 manifest.frame_rate_hz, cfg, out.report.left_eye);
  out.right = detail::process_eye(session_dir, manifest.right_frames, Eye::Right,
                                  manifest.frame_rate_hz, cfg, out.report.right_eye);
  out.report.rapd =
      score_session(out.left.filtered, out.right.filtered, manifest.protocol, cfg.windows);
  return out;
}

// --- report JSON ---------------------------------------------------------------

inline json report_to_json(const ResultsReport& r) {
  auto eye_json = [](const EyeSummary& e) {
    return json{{"sample_count", e.sample_count},
                {"valid_count", e.valid_count},
                {"valid_fraction", e.valid_fraction},
                {"interpolated_count", e.interpolated_count}};
  };
  json windows = json::array();
  for (const WindowScore& w : r.rapd.windows) {
    windows.push_back({{"event_index", w.event_index},
                       {"stimulated_eye", std::string(1, to_char(w.stimulated_eye))},
                       {"rest_ms", json::array({w.rest_start_ms, w.rest_end_ms})},
                       {"constriction_ms",
                        json::array({w.constriction_start_ms, w.constriction_end_ms})},
                       {"degenerate_rest", w.degenerate_rest},
                       {"direct", w.direct ? json(*w.direct) : json(nullptr)},
                       {"consensual", w.consensual ? json(*w.consensual) : json(nullptr)},
                       {"used", w.used},
                       {"skip_reason", w.skip_reason}});
  }
  return {{"schema_version", r.schema_version},
          {"session_id", r.session_id},
          {"eyes", {{"left", eye_json(r.left_eye)}, {"right", eye_json(r.right_eye)}}},
          {"windows", windows},
          {"medians", {{"right", r.rapd.median_right}, {"left", r.rapd.median_left}}},
          {"score", r.rapd.score},
          {"classification", to_string(r.rapd.classification)},
          {"defect_side", to_string(r.rapd.defect_side)},
          {"config", config_to_json(r.config)}};
}

inline ResultsReport report_from_json(const json& j) {
  ResultsReport r;
  r.schema_version = detail::require(j, "schema_version", "report").get<int>();
  if (r.schema_version != kReportSchemaVersion)
    fail(ErrorCode::SchemaMismatch, "report schema_version " +
                                        std::to_string(r.schema_version) + ", expected " +
                                        std::to_string(kReportSchemaVersion));
  r.session_id = detail::require(j, "session_id", "report").get<std::string>();
  auto parse_eye = [&](const json& ej) {
    EyeSummary e;
    e.sample_count = detail::require(ej, "sample_count", "eye summary").get<std::size_t>();
    e.valid_count = detail::require(ej, "valid_count", "eye summary").get<std::size_t>();
    e.valid_fraction = detail::require(ej, "valid_fraction", "eye summary").get<double>();
    e.interpolated_count =
        detail::require(ej, "interpolated_count", "eye summary").get<std::size_t>();
    return e;
  };
  const json eyes = detail::require(j, "eyes", "report");
  r.left_eye = parse_eye(detail::require(eyes, "left", "eyes"));
  r.right_eye = parse_eye(detail::require(eyes, "right", "eyes"));

  for (const json& wj : detail::require(j, "windows", "report")) {
    WindowScore w;
    w.event_index = detail::require(wj, "event_index", "window").get<std::size_t>();
    w.stimulated_eye = detail::eye_from_string(
        detail::require(wj, "stimulated_eye", "window").get<std::string>(), "window");
    const json rest = detail::require(wj, "rest_ms", "window");
    const json con = detail::require(wj, "constriction_ms", "window");
    w.rest_start_ms = rest.at(0).get<double>();
    w.rest_end_ms = rest.at(1).get<double>();
    w.constriction_start_ms = con.at(0).get<double>();
    w.constriction_end_ms = con.at(1).get<double>();
    w.degenerate_rest = detail::require(wj, "degenerate_rest", "window").get<bool>();
    const json direct = detail::require(wj, "direct", "window");
    if (!direct.is_null()) w.direct = direct.get<double>();
    const json consensual = detail::require(wj, "consensual", "window");
    if (!consensual.is_null()) w.consensual = consensual.get<double>();
    w.used = detail::require(wj, "used", "window").get<bool>();
    w.skip_reason = detail::require(wj, "skip_reason", "window").get<std::string>();
    if (w.used && w.direct)
      (w.stimulated_eye == Eye::Right ? r.rapd.magnitudes_right : r.rapd.magnitudes_left)
          .push_back(*w.direct);
    r.rapd.windows.push_back(std::move(w));
  }

  const json medians = detail::require(j, "medians", "report");
  r.rapd.median_right = detail::require(medians, "right", "medians").get<double>();
  r.rapd.median_left = detail::require(medians, "left", "medians").get<double>();
  r.rapd.score = detail::require(j, "score", "report").get<double>();

  const std::string cls = detail::require(j, "classification", "report").get<std::string>();
  if (cls == "negative") r.rapd.classification = Classification::Negative;
  else if (cls == "indeterminate") r.rapd.classification = Classification::Indeterminate;
  else if (cls == "positive") r.rapd.classification = Classification::Positive;
  else fail(ErrorCode::ParseError, "unknown classification '" + cls + "'");

  const std::string side = detail::require(j, "defect_side", "report").get<std::string>();
  if (side == "none") r.rapd.defect_side = DefectSide::None;
  else if (side == "left") r.rapd.defect_side = DefectSide::Left;
  else if (side == "right") r.rapd.defect_side = DefectSide::Right;
  else fail(ErrorCode::ParseError, "unknown defect side '" + side + "'");

  r.config = config_from_json(detail::require(j, "config", "report"));
  return r;
}

inline ResultsReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, path.string() + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

inline void write_report(const std::filesystem::path& path, const ResultsReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::ParseError, path.string() + ": cannot open for writing");
  out << canonical_dump(report_to_json(r));
}

// --- CSV export ------------------------------------------------------------------

inline std::string traces_to_csv(const TraceBundle& left, const TraceBundle& right) {
  std::string out = "timestamp_ms,eye,diameter_px,valid,stage\n";
  auto emit = [&out](const DiameterTrace& t, const char* stage) {
    for (const TraceSample& s : t.samples) {
      out += detail::canonical_number(s.timestamp_ms);
      out += ',';
      out += to_char(t.eye);
      out += ',';
      out += detail::canonical_number(s.diameter_px);
      out += ',';
      out += s.valid ? '1' : '0';
      out += ',';
      out += stage;
      out += '\n';
    }
  };
  for (const TraceBundle* b : {&left, &right}) {
    emit(b->raw, "raw");
    emit(b->flagged, "flagged");
    emit(b->interpolated, "interpolated");
    emit(b->filtered, "filtered");
  }
  return out;
}

}  // namespace rapd
