#pragma once

#include <algorithm>
#include <cstdio>
#include <string>

#include "rapd/analysis.hpp"

namespace rapd {

namespace detail {

inline std::string svg_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* stimulus_fill(LedColor c) {
  switch (c) {
    case LedColor::Red: return "#d62728";
    case LedColor::Green: return "#2ca02c";
    case LedColor::Blue: return "#1f77b4";
    case LedColor::White: return "#bdb76b";
  }
  return "#888888";
}

}  // namespace detail

// Single self-contained SVG: both eyes' filtered diameter curves, shaded
// stimulus intervals labeled with eye and color, circles on interpolated
// samples, and a score text block.
inline std::string render_report_plot(const AnalysisOutput& run) {
  using detail::svg_num;
  const double width = 960, height = 480;
  const double ml = 64, mr = 16, mt = 48, mb = 64;
  const double pw = width - ml - mr, ph = height - mt - mb;

  const double t_end = std::max(1.0, run.protocol.session_end_ms);
  double d_max = 1.0;
  for (const TraceBundle* b : {&run.left, &run.right})
    for (const TraceSample& s : b->filtered.samples)
      if (s.valid) d_max = std::max(d_max, s.diameter_px);
  d_max *= 1.15;

  auto X = [&](double t_ms) { return ml + t_ms / t_end * pw; };
  auto Y = [&](double d_px) { return mt + ph - d_px / d_max * ph; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
         "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) + " " +
         svg_num(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + svg_num(width) + "\" height=\"" +
         svg_num(height) + "\" fill=\"white\"/>\n";

  // stimulus intervals
  for (const StimulusEvent& e : run.protocol.events) {
    svg += "<rect class=\"stimulus\" x=\"" + svg_num(X(e.t_on_ms)) + "\" y=\"" + svg_num(mt) +
           "\" width=\"" + svg_num(X(e.t_off_ms) - X(e.t_on_ms)) + "\" height=\"" +
           svg_num(ph) + "\" fill=\"" + detail::stimulus_fill(e.color) +
           "\" fill-opacity=\"0.15\"/>\n";
    svg += "<text x=\"" + svg_num(X(e.t_on_ms) + 3) + "\" y=\"" + svg_num(mt + 14) +
           "\" font-size=\"11\" font-family=\"sans-serif\">" + to_char(e.eye) +
           std::string(1, '/') + to_char(e.color) + "</text>\n";
  }

  // axes
  svg += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(mt + ph) + "\" x2=\"" +
         svg_num(ml + pw) + "\" y2=\"" + svg_num(mt + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(mt) + "\" x2=\"" + svg_num(ml) +
         "\" y2=\"" + svg_num(mt + ph) + "\" stroke=\"black\"/>\n";
  for (double t = 0.0; t <= t_end; t += 1000.0) {
    svg += "<line x1=\"" + svg_num(X(t)) + "\" y1=\"" + svg_num(mt + ph) + "\" x2=\"" +
           svg_num(X(t)) + "\" y2=\"" + svg_num(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + svg_num(X(t)) + "\" y=\"" + svg_num(mt + ph + 18) +
           "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"middle\">" +
           detail::canonical_number(t / 1000.0) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double d = d_max * i / 4.0;
    svg += "<text x=\"" + svg_num(ml - 6) + "\" y=\"" + svg_num(Y(d) + 3) +
           "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\">" +
           svg_num(d) + "</text>\n";
  }
  svg += "<text x=\"" + svg_num(ml + pw / 2) + "\" y=\"" + svg_num(height - 28) +
         "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">time (s)"
         "</text>\n";
  svg += "<text x=\"16\" y=\"" + svg_num(mt + ph / 2) +
         "\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 16 " +
         svg_num(mt + ph / 2) + ")\" text-anchor=\"middle\">pupil diameter (px)</text>\n";

  // one polyline per eye over valid filtered samples
  struct Series {
    const TraceBundle* bundle;
    const char* cls;
    const char* stroke;
  };
  const Series series[2] = {{&run.left, "trace-left", "#1f77b4"},
                            {&run.right, "trace-right", "#ff7f0e"}};
  for (const Series& s : series) {
    std::string pts;
    for (const TraceSample& ts : s.bundle->filtered.samples) {
      if (!ts.valid) continue;
      pts += svg_num(X(ts.timestamp_ms)) + "," + svg_num(Y(ts.diameter_px)) + " ";
    }
    svg += "<polyline class=\"" + std::string(s.cls) + "\" points=\"" + pts +
           "\" fill=\"none\" stroke=\"" + s.stroke + "\" stroke-width=\"1.5\"/>\n";
    for (std::size_t i = 0; i < s.bundle->interpolated.samples.size(); ++i) {
      const TraceSample& ts = s.bundle->interpolated.samples[i];
      if (!(ts.valid && !s.bundle->flagged.samples[i].valid)) continue;
      svg += "<circle class=\"interp\" cx=\"" + svg_num(X(ts.timestamp_ms)) + "\" cy=\"" +
             svg_num(Y(ts.diameter_px)) + "\" r=\"2\" fill=\"none\" stroke=\"" + s.stroke +
             "\"/>\n";
    }
  }

  // legend + verdict
  const ResultsReport& r = run.report;
  char line[160];
  std::snprintf(line, sizeof line,
                "RAPD score %.4f | %s%s%s | medians R %.2f%% / L %.2f%%", r.rapd.score,
                to_string(r.rapd.classification),
                r.rapd.defect_side == DefectSide::None ? "" : ", defect ",
                r.rapd.defect_side == DefectSide::None ? "" : to_string(r.rapd.defect_side),
                r.rapd.median_right, r.rapd.median_left);
  svg += "<text x=\"" + svg_num(ml) + "\" y=\"20\" font-size=\"13\" "
         "font-family=\"sans-serif\">" + std::string(line) + "</text>\n";
  svg += "<text x=\"" + svg_num(ml) + "\" y=\"36\" font-size=\"11\" "
         "font-family=\"sans-serif\" fill=\"#1f77b4\">left eye</text>\n";
  svg += "<text x=\"" + svg_num(ml + 70) + "\" y=\"36\" font-size=\"11\" "
         "font-family=\"sans-serif\" fill=\"#ff7f0e\">right eye</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace rapd
