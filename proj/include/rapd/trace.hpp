#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "rapd/detection.hpp"
#include "rapd/protocol.hpp"

namespace rapd {

struct TraceSample {
  double timestamp_ms = 0.0;
  double diameter_px = 0.0;
  bool valid = false;
};

// Per-eye diameter time series. Timestamps are strictly increasing; invalid
// samples are kept in place so gaps stay visible to downstream stages.
struct DiameterTrace {
  Eye eye = Eye::Left;
  std::vector<TraceSample> samples;
  double nominal_rate_hz = 0.0;
};

struct TraceConfig {
  double max_jump_fraction = 0.25;  // allowed |d - prev|/prev per frame period
  double lowpass_cutoff_hz = 4.0;
  double max_gap_ms = 800.0;  // longest invalid span interpolation may bridge
};

inline DiameterTrace assemble_trace(const std::vector<PupilMeasurement>& measurements,
                                    Eye eye, double nominal_rate_hz) {
  if (nominal_rate_hz <= 0.0)
    fail(ErrorCode::InvalidParameter, "nominal rate must be > 0");
  DiameterTrace t;
  t.eye = eye;
  t.nominal_rate_hz = nominal_rate_hz;
  t.samples.reserve(measurements.size());
  for (const PupilMeasurement& m : measurements) {
    if (m.eye != eye)
      fail(ErrorCode::InvalidParameter, "measurement tagged with the wrong eye");
    t.samples.push_back({m.timestamp_ms, m.diameter_px, m.valid});
  }
  std::stable_sort(t.samples.begin(), t.samples.end(),
                   [](const TraceSample& a, const TraceSample& b) {
                     return a.timestamp_ms < b.timestamp_ms;
                   });
  for (std::size_t i = 1; i < t.samples.size(); ++i)
    if (t.samples[i].timestamp_ms == t.samples[i - 1].timestamp_ms)
      fail(ErrorCode::DuplicateTimestamp,
           "duplicate timestamp " + std::to_string(t.samples[i].timestamp_ms));
  return t;
}

// Marks samples whose diameter moved implausibly fast. The reference is the
// most recent still-valid sample and the allowance scales with the elapsed
// time, so a legitimate reading after a long unbridged gap is not condemned
// for the drift that accumulated while the eye was closed.
inline DiameterTrace flag_artifacts(DiameterTrace t, const TraceConfig& cfg) {
  if (cfg.max_jump_fraction <= 0.0)
    fail(ErrorCode::InvalidParameter, "max_jump_fraction must be > 0");
  const double frame_ms = 1000.0 / t.nominal_rate_hz;
  const TraceSample* prev = nullptr;
  for (TraceSample& s : t.samples) {
    if (!s.valid) continue;
    if (prev != nullptr) {
      const double periods = std::max(1.0, (s.timestamp_ms - prev->timestamp_ms) / frame_ms);
      const double allowed = cfg.max_jump_fraction * periods * prev->diameter_px;
      if (std::abs(s.diameter_px - prev->diameter_px) > allowed) {
        s.valid = false;
        continue;
      }
    }
    prev = &s;
  }
  return t;
}

// Linear interpolation across invalid runs that are bounded by valid samples
// on both sides and span less than max_gap_ms (measured between the bounding
// valid samples). Bridged samples become valid; leading/trailing runs and
// over-long gaps are left untouched.
inline DiameterTrace interpolate_gaps(DiameterTrace t, const TraceConfig& cfg) {
  std::size_t valid_count = 0;
  for (const TraceSample& s : t.samples)
    if (s.valid) ++valid_count;
  if (valid_count < 2) fail(ErrorCode::TooSparse, "fewer than 2 valid samples");

  std::size_t i = 0;
  const std::size_t n = t.samples.size();
  while (i < n && !t.samples[i].valid) ++i;  // leading run stays invalid
  std::size_t left = i;
  for (++i; i < n; ++i) {
    if (!t.samples[i].valid) continue;
    if (i > left + 1) {
      const TraceSample& a = t.samples[left];
      const TraceSample& b = t.samples[i];
      if (b.timestamp_ms - a.timestamp_ms < cfg.max_gap_ms) {
        for (std::size_t k = left + 1; k < i; ++k) {
          const double u =
              (t.samples[k].timestamp_ms - a.timestamp_ms) / (b.timestamp_ms - a.timestamp_ms);
          t.samples[k].diameter_px = a.diameter_px + u * (b.diameter_px - a.diameter_px);
          t.samples[k].valid = true;
        }
      }
    }
    left = i;
  }
  return t;
}

namespace detail {

// Blackman-windowed sinc, cutoff_hz at rate_hz, length ceil(2*rate/cutoff)
// rounded up to odd, normalized to unit DC gain.
inline std::vector<double> lowpass_kernel(double rate_hz, double cutoff_hz) {
  int len = static_cast<int>(std::ceil(2.0 * rate_hz / cutoff_hz));
  if (len % 2 == 0) ++len;
  if (len < 3) len = 3;
  const int mid = len / 2;
  const double fc = cutoff_hz / rate_hz;  // cycles per sample
  std::vector<double> h(static_cast<std::size_t>(len));
  double sum = 0.0;
  for (int i = 0; i < len; ++i) {
    const int k = i - mid;
    double sinc = 2.0 * fc;
    if (k != 0) sinc = std::sin(2.0 * std::numbers::pi * fc * k) / (std::numbers::pi * k);
    const double u = static_cast<double>(i) / (len - 1);
    const double window = 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * u) +
                          0.08 * std::cos(4.0 * std::numbers::pi * u);
    h[static_cast<std::size_t>(i)] = sinc * window;
    sum += h[static_cast<std::size_t>(i)];
  }
  for (double& v : h) v /= sum;
  return h;
}

// One causal pass with edge replication: y[i] = sum_k h[k] * x[i-k].
inline std::vector<double> causal_pass(const std::vector<double>& x,
                                       const std::vector<double>& h) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> y(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(h.size()); ++k) {
      const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i - k, 0, n - 1);
      acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

inline void zero_phase_filter(std::vector<double>& x, const std::vector<double>& h) {
  std::vector<double> y = causal_pass(x, h);
  std::reverse(y.begin(), y.end());
  y = causal_pass(y, h);
  std::reverse(y.begin(), y.end());
  x = std::move(y);
}

}  // namespace detail

// Zero-phase low pass: the same causal windowed-sinc kernel is run forward
// and then backward, which cancels the group delay and squares the magnitude
// response. Each contiguous run of valid samples is filtered on its own;
// samples that interpolation could not bridge pass through untouched, and
// their windows get excluded at scoring time instead of being smeared across.
inline DiameterTrace low_pass(DiameterTrace t, const TraceConfig& cfg) {
  if (cfg.lowpass_cutoff_hz <= 0.0)
    fail(ErrorCode::InvalidParameter, "cutoff must be > 0");
  if (cfg.lowpass_cutoff_hz >= t.nominal_rate_hz / 2.0)
    fail(ErrorCode::InvalidParameter, "cutoff must be below half the sample rate");

  const std::vector<double> kernel =
      detail::lowpass_kernel(t.nominal_rate_hz, cfg.lowpass_cutoff_hz);
  const double frame_ms = 1000.0 / t.nominal_rate_hz;

  const std::size_t n = t.samples.size();
  std::size_t i = 0;
  while (i < n) {
    if (!t.samples[i].valid) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < n && t.samples[end].valid) ++end;

    for (std::size_t k = i + 1; k < end; ++k) {
      const double dt = t.samples[k].timestamp_ms - t.samples[k - 1].timestamp_ms;
      if (std::abs(dt - frame_ms) > 0.1 * frame_ms)
        fail(ErrorCode::InvalidParameter,
             "sampling jitter exceeds 10% of the nominal rate");
    }

    std::vector<double> seg(end - i);
    for (std::size_t k = i; k < end; ++k) seg[k - i] = t.samples[k].diameter_px;
    detail::zero_phase_filter(seg, kernel);
    for (std::size_t k = i; k < end; ++k) t.samples[k].diameter_px = seg[k - i];
    i = end;
  }
  return t;
}

// Constriction magnitude per Eq-style percentage change: rest diameter is the
// mean of valid samples in the rest interval, constricted diameter the
// minimum valid sample in the constriction interval (peak constriction).
// Negative results mean the pupil dilated.
inline double magnitude_for_window(const DiameterTrace& t, const AnalysisWindow& w) {
  double rest_sum = 0.0;
  std::size_t rest_n = 0;
  double con_min = std::numeric_limits<double>::infinity();
  bool con_found = false;
  for (const TraceSample& s : t.samples) {
    if (!s.valid) continue;
    if (s.timestamp_ms >= w.rest_start_ms && s.timestamp_ms < w.rest_end_ms) {
      rest_sum += s.diameter_px;
      ++rest_n;
    }
    if (s.timestamp_ms >= w.constriction_start_ms && s.timestamp_ms < w.constriction_end_ms) {
      con_min = std::min(con_min, s.diameter_px);
      con_found = true;
    }
  }
  if (rest_n == 0)
    fail(ErrorCode::InsufficientData,
         "no valid samples in rest interval of event " + std::to_string(w.event_index));
  if (!con_found)
    fail(ErrorCode::InsufficientData,
         "no valid samples in constriction interval of event " + std::to_string(w.event_index));
  const double rest = rest_sum / static_cast<double>(rest_n);
  return (rest - con_min) / rest * 100.0;
}

}  // namespace rapd
