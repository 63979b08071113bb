#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rapd/trace.hpp"

namespace rapd {

enum class Classification : std::uint8_t { Negative, Indeterminate, Positive };

enum class DefectSide : std::uint8_t { None, Left, Right };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::Negative: return "negative";
    case Classification::Indeterminate: return "indeterminate";
    case Classification::Positive: return "positive";
  }
  return "unknown";
}

inline const char* to_string(DefectSide s) {
  switch (s) {
    case DefectSide::None: return "none";
    case DefectSide::Left: return "left";
    case DefectSide::Right: return "right";
  }
  return "unknown";
}

inline double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "median of empty list");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lo = *std::max_element(values.begin(), values.begin() + mid);
    m = (lo + m) / 2.0;
  }
  return m;
}

// Signed asymmetry score: 10*log10(median right-stimulation magnitude over
// median left-stimulation magnitude). A non-responding or dilating eye makes
// the log undefined and is reported as an error, never clamped.
inline double compute_rapd(const std::vector<double>& magnitudes_right,
                           const std::vector<double>& magnitudes_left) {
  if (magnitudes_right.empty()) fail(ErrorCode::EmptyInput, "no right-eye magnitudes");
  if (magnitudes_left.empty()) fail(ErrorCode::EmptyInput, "no left-eye magnitudes");
  const double mr = median(magnitudes_right);
  const double ml = median(magnitudes_left);
  if (mr <= 0.0)
    fail(ErrorCode::NonPositiveMedian, "right median magnitude is not positive");
  if (ml <= 0.0)
    fail(ErrorCode::NonPositiveMedian, "left median magnitude is not positive");
  return 10.0 * std::log10(mr / ml);
}

// |score| < 0.5 is negative, |score| > 1 positive; the band between the two
// published thresholds (both boundaries included) is reported as
// indeterminate rather than silently rebucketed. A positive score means the
// right eye's swings constrict more, i.e. the left afferent pathway is the
// weak one.
inline std::pair<Classification, DefectSide> classify(double score) {
  if (!std::isfinite(score)) fail(ErrorCode::InvalidParameter, "score must be finite");
  const double mag = std::abs(score);
  if (mag < 0.5) return {Classification::Negative, DefectSide::None};
  if (mag > 1.0)
    return {Classification::Positive, score > 0.0 ? DefectSide::Left : DefectSide::Right};
  return {Classification::Indeterminate, DefectSide::None};
}

struct WindowConfig {
  double rest_lead_ms = 500.0;
  double constriction_tail_ms = 300.0;
};

// Per-window audit record kept alongside the aggregate score.
struct WindowScore {
  std::size_t event_index = 0;
  Eye stimulated_eye = Eye::Right;
  double rest_start_ms = 0.0, rest_end_ms = 0.0;
  double constriction_start_ms = 0.0, constriction_end_ms = 0.0;
  bool degenerate_rest = false;
  std::optional<double> direct;      // stimulated eye's own response (scored)
  std::optional<double> consensual;  // fellow eye's response (reported only)
  bool used = false;
  std::string skip_reason;  // empty when used
};

struct RapdResult {
  std::vector<double> magnitudes_right;  // direct magnitudes, right-eye stimuli
  std::vector<double> magnitudes_left;
  double median_right = 0.0;
  double median_left = 0.0;
  double score = 0.0;
  Classification classification = Classification::Negative;
  DefectSide defect_side = DefectSide::None;
  std::vector<WindowScore> windows;
};

// Scores a fully processed session. Each stimulus contributes the stimulated
// eye's own (direct) magnitude to that eye's list; the consensual response is
// recorded for inspection but never scored. Degenerate or data-starved
// windows are skipped with a reason instead of poisoning the medians.
inline RapdResult score_session(const DiameterTrace& left, const DiameterTrace& right,
                                const StimulusProtocol& protocol,
                                const WindowConfig& cfg = {}) {
  if (left.eye != Eye::Left || right.eye != Eye::Right)
    fail(ErrorCode::InvalidParameter, "traces passed in the wrong order");

  RapdResult result;
  const std::vector<AnalysisWindow> windows =
      stimulation_windows(protocol, cfg.rest_lead_ms, cfg.constriction_tail_ms);
  for (const AnalysisWindow& w : windows) {
    WindowScore ws;
    ws.event_index = w.event_index;
    ws.stimulated_eye = w.stimulated_eye;
    ws.rest_start_ms = w.rest_start_ms;
    ws.rest_end_ms = w.rest_end_ms;
    ws.constriction_start_ms = w.constriction_start_ms;
    ws.constriction_end_ms = w.constriction_end_ms;
    ws.degenerate_rest = w.degenerate_rest;

    const DiameterTrace& direct_trace = w.stimulated_eye == Eye::Left ? left : right;
    const DiameterTrace& fellow_trace = w.stimulated_eye == Eye::Left ? right : left;

    if (w.degenerate_rest) {
      ws.skip_reason = "degenerate rest window (no baseline before stimulus onset)";
    } else {
      try {
        ws.direct = magnitude_for_window(direct_trace, w);
        ws.used = true;
      } catch (const Error& e) {
        ws.skip_reason = e.what();
      }
    }
    try {
      ws.consensual = magnitude_for_window(fellow_trace, w);
    } catch (const Error&) {
      // consensual response is best-effort
    }
    if (ws.used) {
      (w.stimulated_eye == Eye::Right ? result.magnitudes_right : result.magnitudes_left)
          .push_back(*ws.direct);
    }
    result.windows.push_back(std::move(ws));
  }

  result.score = compute_rapd(result.magnitudes_right, result.magnitudes_left);
  result.median_right = median(result.magnitudes_right);
  result.median_left = median(result.magnitudes_left);
  const auto [cls, side] = classify(result.score);
  result.classification = cls;
  result.defect_side = side;
  return result;
}

}  // namespace rapd
