#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "rapd/common.hpp"

namespace rapd {

// One timed LED pulse aimed at one eye. Times are session-relative
// milliseconds; intensity is a normalized [0,1] drive level.
struct StimulusEvent {
  Eye eye = Eye::Right;
  LedColor color = LedColor::White;
  double intensity = 1.0;
  double t_on_ms = 0.0;
  double t_off_ms = 0.0;

  double on_duration_ms() const { return t_off_ms - t_on_ms; }
};

// Swinging-flashlight style schedule: events sorted by onset, one LED lit at
// a time, session_end_ms at or past the last offset.
struct StimulusProtocol {
  std::vector<StimulusEvent> events;
  double session_end_ms = 0.0;
};

struct ProtocolViolation {
  enum class Kind {
    EventOrder,       // events not sorted ascending by t_on
    Overlap,          // two events lit at the same time
    EmptyEvent,       // t_off <= t_on
    NegativeOnset,    // t_on < 0
    IntensityRange,   // intensity outside [0,1]
    SessionEndEarly,  // session_end < max t_off
  };

  Kind kind;
  std::size_t event_index = 0;  // first event involved
  std::string detail;
};

inline const char* to_string(ProtocolViolation::Kind k) {
  using Kind = ProtocolViolation::Kind;
  switch (k) {
    case Kind::EventOrder: return "EventOrder";
    case Kind::Overlap: return "Overlap";
    case Kind::EmptyEvent: return "EmptyEvent";
    case Kind::NegativeOnset: return "NegativeOnset";
    case Kind::IntensityRange: return "IntensityRange";
    case Kind::SessionEndEarly: return "SessionEndEarly";
  }
  return "Unknown";
}

// Violations are data, not errors: an empty list means the protocol is valid.
inline std::vector<ProtocolViolation> validate_protocol(const StimulusProtocol& p) {
  using Kind = ProtocolViolation::Kind;
  std::vector<ProtocolViolation> out;
  double max_off = 0.0;
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    const StimulusEvent& e = p.events[i];
    if (e.t_on_ms < 0.0)
      out.push_back({Kind::NegativeOnset, i, "t_on_ms < 0"});
    if (e.t_off_ms <= e.t_on_ms)
      out.push_back({Kind::EmptyEvent, i, "t_off_ms <= t_on_ms"});
    if (e.intensity < 0.0 || e.intensity > 1.0)
      out.push_back({Kind::IntensityRange, i, "intensity outside [0,1]"});
    if (i > 0) {
      const StimulusEvent& prev = p.events[i - 1];
      if (e.t_on_ms < prev.t_on_ms)
        out.push_back({Kind::EventOrder, i, "t_on_ms decreases"});
      else if (e.t_on_ms < prev.t_off_ms)
        out.push_back({Kind::Overlap, i - 1, "events " + std::to_string(i - 1) +
                                                 " and " + std::to_string(i) +
                                                 " overlap"});
    }
    max_off = std::max(max_off, e.t_off_ms);
  }
  if (p.session_end_ms < max_off)
    out.push_back({Kind::SessionEndEarly, p.events.empty() ? 0 : p.events.size() - 1,
                   "session_end_ms before last t_off_ms"});
  return out;
}

inline bool protocol_is_valid(const StimulusProtocol& p) {
  return validate_protocol(p).empty();
}

// Alternating Right, Left, Right, ... schedule. Event i runs
// [i*(on+off), i*(on+off)+on); the session ends after the last dark gap.
inline StimulusProtocol build_swinging_protocol(int cycles, double on_ms, double off_ms,
                                                LedColor color, double intensity) {
  if (cycles < 1) fail(ErrorCode::InvalidParameter, "cycles must be >= 1");
  if (on_ms <= 0.0) fail(ErrorCode::InvalidParameter, "on_ms must be > 0");
  if (off_ms <= 0.0) fail(ErrorCode::InvalidParameter, "off_ms must be > 0");
  if (intensity < 0.0 || intensity > 1.0)
    fail(ErrorCode::InvalidParameter, "intensity must be in [0,1]");

  const double period = on_ms + off_ms;
  StimulusProtocol p;
  p.events.reserve(static_cast<std::size_t>(2 * cycles));
  for (int i = 0; i < 2 * cycles; ++i) {
    StimulusEvent e;
    e.eye = (i % 2 == 0) ? Eye::Right : Eye::Left;
    e.color = color;
    e.intensity = intensity;
    e.t_on_ms = i * period;
    e.t_off_ms = i * period + on_ms;
    p.events.push_back(e);
  }
  p.session_end_ms = 2 * cycles * period;
  return p;
}

// Sampling windows implied by one stimulus: a baseline interval just before
// onset and a peak-constriction interval anchored to the end of the pulse.
// Intervals are half-open [start, end).
struct AnalysisWindow {
  Eye stimulated_eye = Eye::Right;
  std::size_t event_index = 0;
  double rest_start_ms = 0.0;
  double rest_end_ms = 0.0;
  double constriction_start_ms = 0.0;
  double constriction_end_ms = 0.0;
  bool degenerate_rest = false;  // clamping left no baseline interval
};

inline std::vector<AnalysisWindow> stimulation_windows(const StimulusProtocol& p,
                                                       double rest_lead_ms = 500.0,
                                                       double constriction_tail_ms = 300.0) {
  if (rest_lead_ms <= 0.0) fail(ErrorCode::InvalidParameter, "rest_lead_ms must be > 0");
  if (constriction_tail_ms <= 0.0)
    fail(ErrorCode::InvalidParameter, "constriction_tail_ms must be > 0");
  if (!protocol_is_valid(p)) fail(ErrorCode::InvalidParameter, "protocol is not valid");

  std::vector<AnalysisWindow> out;
  out.reserve(p.events.size());
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    const StimulusEvent& e = p.events[i];
    if (constriction_tail_ms > e.on_duration_ms())
      fail(ErrorCode::InvalidParameter,
           "constriction_tail_ms exceeds on-duration of event " + std::to_string(i));
    AnalysisWindow w;
    w.stimulated_eye = e.eye;
    w.event_index = i;
    w.rest_start_ms = std::max(0.0, e.t_on_ms - rest_lead_ms);
    w.rest_end_ms = e.t_on_ms;
    w.constriction_start_ms = e.t_off_ms - constriction_tail_ms;
    w.constriction_end_ms = e.t_off_ms;
    w.degenerate_rest = !(w.rest_start_ms < w.rest_end_ms);
    out.push_back(w);
  }
  return out;
}

}  // namespace rapd
