// Command-line surface for the pupillometry pipeline: synthesize sessions,
// analyze recorded ones, and pretty-print saved reports.
//
// Exit codes: 0 success, 2 input/parse error, 3 analysis error,
// 4 internal failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rapd/analysis.hpp"
#include "rapd/simulator.hpp"
#include "rapd/svg_plot.hpp"

namespace fs = std::filesystem;

namespace {

int exit_code_for(rapd::ErrorCode code) {
  using EC = rapd::ErrorCode;
  switch (code) {
    case EC::InvalidParameter:
    case EC::ParseError:
    case EC::SchemaMismatch:
    case EC::MissingFrame:
    case EC::NonMonotonicTimestamps:
      return 2;
    case EC::NoCandidate:
    case EC::NoContour:
    case EC::DegenerateGeometry:
    case EC::DuplicateTimestamp:
    case EC::TooSparse:
    case EC::InsufficientData:
    case EC::EmptyInput:
    case EC::NonPositiveMedian:
      return 3;
    case EC::Internal:
      return 4;
  }
  return 4;
}

rapd::LedColor parse_color(const std::string& s) {
  if (s == "r") return rapd::LedColor::Red;
  if (s == "g") return rapd::LedColor::Green;
  if (s == "b") return rapd::LedColor::Blue;
  if (s == "w") return rapd::LedColor::White;
  rapd::fail(rapd::ErrorCode::InvalidParameter, "--color must be one of r|g|b|w");
}

// "L:start_ms:duration_ms" or "R:start_ms:duration_ms"
void parse_blink(const std::string& spec, rapd::BlinkSchedule& blinks) {
  const auto p1 = spec.find(':');
  const auto p2 = spec.find(':', p1 == std::string::npos ? p1 : p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos)
    rapd::fail(rapd::ErrorCode::InvalidParameter,
               "--blink expects EYE:START_MS:DURATION_MS, got '" + spec + "'");
  const std::string eye = spec.substr(0, p1);
  rapd::BlinkEvent b;
  try {
    b.start_ms = std::stod(spec.substr(p1 + 1, p2 - p1 - 1));
    b.duration_ms = std::stod(spec.substr(p2 + 1));
  } catch (const std::exception&) {
    rapd::fail(rapd::ErrorCode::InvalidParameter, "--blink has non-numeric fields: " + spec);
  }
  if (eye == "L") blinks.left.push_back(b);
  else if (eye == "R") blinks.right.push_back(b);
  else rapd::fail(rapd::ErrorCode::InvalidParameter, "--blink eye must be L or R");
}

rapd::StimulusProtocol load_protocol_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) rapd::fail(rapd::ErrorCode::ParseError, path.string() + ": cannot open");
  rapd::json j;
  try {
    in >> j;
  } catch (const rapd::json::exception& e) {
    rapd::fail(rapd::ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  rapd::StimulusProtocol p = rapd::protocol_from_json(j);
  const auto violations = rapd::validate_protocol(p);
  if (!violations.empty()) {
    std::string msg = path.string() + ": invalid protocol:";
    for (const auto& v : violations)
      msg += std::string(" [") + rapd::to_string(v.kind) + " at event " +
             std::to_string(v.event_index) + "]";
    rapd::fail(rapd::ErrorCode::InvalidParameter, msg);
  }
  return p;
}

int run_simulate(const std::string& out_dir, const std::string& protocol_file, int cycles,
                 double on_ms, double off_ms, const std::string& color, double intensity,
                 const std::string& defect_eye, double defect_gain, double rate,
                 std::uint64_t seed, double pixel_noise, double noise_mm, double hippus_mm,
                 const std::vector<std::string>& blink_specs) {
  rapd::StimulusProtocol protocol =
      protocol_file.empty()
          ? rapd::build_swinging_protocol(cycles, on_ms, off_ms, parse_color(color), intensity)
          : load_protocol_file(protocol_file);

  rapd::PlrParams params;
  params.noise_sd_mm = noise_mm;
  params.hippus_amplitude_mm = hippus_mm;
  if (defect_eye == "L") params.afferent_gain_left = defect_gain;
  else if (defect_eye == "R") params.afferent_gain_right = defect_gain;
  else if (defect_eye != "none")
    rapd::fail(rapd::ErrorCode::InvalidParameter, "--defect-eye must be L, R or none");

  rapd::RenderConfig render;
  render.pixel_noise_sd = pixel_noise;

  rapd::BlinkSchedule blinks;
  for (const std::string& spec : blink_specs) parse_blink(spec, blinks);

  const rapd::SimulatedSession session =
      rapd::simulate_session(protocol, params, render, blinks, rate, seed);
  rapd::save_session(out_dir, session);

  std::cout << "session " << session.manifest.session_id << ": "
            << session.left_frames.size() << " frames per eye at " << rate << " Hz -> "
            << out_dir << "\n";
  if (session.truth.true_score)
    std::cout << "ground-truth score " << *session.truth.true_score << "\n";
  else
    std::cout << "ground-truth score undefined (non-positive median magnitude)\n";
  return 0;
}

int run_analyze(const std::string& session_dir, const std::string& config_file,
                const std::string& out_file, const std::string& plot_file,
                const std::string& csv_file) {
  rapd::AnalysisConfig cfg;
  if (!config_file.empty()) {
    std::ifstream in(config_file, std::ios::binary);
    if (!in) rapd::fail(rapd::ErrorCode::ParseError, config_file + ": cannot open");
    rapd::json j;
    try {
      in >> j;
    } catch (const rapd::json::exception& e) {
      rapd::fail(rapd::ErrorCode::ParseError, config_file + ": " + e.what());
    }
    cfg = rapd::config_from_json(j);
  }

  const rapd::AnalysisOutput run = rapd::analyze_session(session_dir, cfg);
  rapd::write_report(out_file, run.report);
  if (!plot_file.empty()) {
    std::ofstream out(plot_file, std::ios::binary | std::ios::trunc);
    if (!out) rapd::fail(rapd::ErrorCode::ParseError, plot_file + ": cannot open for writing");
    out << rapd::render_report_plot(run);
  }
  if (!csv_file.empty()) {
    std::ofstream out(csv_file, std::ios::binary | std::ios::trunc);
    if (!out) rapd::fail(rapd::ErrorCode::ParseError, csv_file + ": cannot open for writing");
    out << rapd::traces_to_csv(run.left, run.right);
  }

  const rapd::RapdResult& r = run.report.rapd;
  std::printf("score %.4f (%s%s%s)\n", r.score, rapd::to_string(r.classification),
              r.defect_side == rapd::DefectSide::None ? "" : ", defect ",
              r.defect_side == rapd::DefectSide::None ? "" : rapd::to_string(r.defect_side));
  return 0;
}

void print_eye_summary(const char* name, const rapd::EyeSummary& e) {
  std::printf("  %-5s eye: %zu frames, %.1f%% valid, %zu interpolated\n", name,
              e.sample_count, 100.0 * e.valid_fraction, e.interpolated_count);
}

int run_report(const std::string& in_file) {
  const rapd::ResultsReport r = rapd::read_report(in_file);
  std::printf("session %s\n", r.session_id.c_str());
  print_eye_summary("left", r.left_eye);
  print_eye_summary("right", r.right_eye);
  std::printf("  windows (direct magnitude %% by stimulated eye):\n");
  for (const rapd::WindowScore& w : r.rapd.windows) {
    if (w.used) {
      std::string extra;
      if (w.consensual) {
        char buf[48];
        std::snprintf(buf, sizeof buf, ", consensual %.2f%%", *w.consensual);
        extra = buf;
      }
      std::printf("    event %zu %c: direct %.2f%%%s\n", w.event_index,
                  rapd::to_char(w.stimulated_eye), *w.direct, extra.c_str());
    } else {
      std::printf("    event %zu %c: skipped (%s)\n", w.event_index,
                  rapd::to_char(w.stimulated_eye), w.skip_reason.c_str());
    }
  }
  std::printf("  medians: right %.4f%%, left %.4f%%\n", r.rapd.median_right,
              r.rapd.median_left);
  std::printf("  RAPD score: %.4f\n", r.rapd.score);
  std::printf("  classification: %s", rapd::to_string(r.rapd.classification));
  if (r.rapd.defect_side != rapd::DefectSide::None)
    std::printf(" (defect side: %s)", rapd::to_string(r.rapd.defect_side));
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pupillometry session simulator and RAPD analyzer"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "render a synthetic eye session to a directory");
  std::string out_dir, protocol_file, color = "w", defect_eye = "none";
  int cycles = 3;
  double on_ms = 1500, off_ms = 1500, intensity = 1.0, defect_gain = 1.0, rate = 30.0;
  double pixel_noise = 6.0, noise_mm = 0.02, hippus_mm = 0.0;
  std::uint64_t seed = 1;
  std::vector<std::string> blink_specs;
  sim->add_option("--out", out_dir, "output session directory")->required();
  sim->add_option("--protocol", protocol_file, "protocol JSON file (overrides builtin flags)");
  sim->add_option("--cycles", cycles, "swing cycles (right+left pairs)");
  sim->add_option("--on-ms", on_ms, "LED on duration per event");
  sim->add_option("--off-ms", off_ms, "dark gap after each event");
  sim->add_option("--color", color, "LED color r|g|b|w");
  sim->add_option("--intensity", intensity, "LED intensity in [0,1]");
  sim->add_option("--defect-eye", defect_eye, "afferent defect side L|R|none");
  sim->add_option("--defect-gain", defect_gain, "afferent gain of the defect eye [0,1]");
  sim->add_option("--rate", rate, "frame rate in Hz");
  sim->add_option("--seed", seed, "RNG seed (all randomness derives from it)");
  sim->add_option("--pixel-noise", pixel_noise, "Gaussian pixel noise sd (intensity levels)");
  sim->add_option("--noise-mm", noise_mm, "diameter jitter sd in mm");
  sim->add_option("--hippus-mm", hippus_mm, "hippus amplitude in mm");
  sim->add_option("--blink", blink_specs, "blink as EYE:START_MS:DURATION_MS (repeatable)");

  // analyze
  auto* ana = app.add_subcommand("analyze", "run the pipeline on a recorded session");
  std::string session_dir, config_file, report_out, plot_out, csv_out;
  ana->add_option("--session", session_dir, "session directory with manifest.json")->required();
  ana->add_option("--config", config_file, "analysis config JSON (partial overrides)");
  ana->add_option("--out", report_out, "report JSON output path")->required();
  ana->add_option("--plot", plot_out, "SVG plot output path");
  ana->add_option("--trace-csv", csv_out, "per-stage trace CSV output path");

  // report
  auto* rep = app.add_subcommand("report", "print a saved report");
  std::string report_in;
  rep->add_option("--in", report_in, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(out_dir, protocol_file, cycles, on_ms, off_ms, color, intensity,
                          defect_eye, defect_gain, rate, seed, pixel_noise, noise_mm,
                          hippus_mm, blink_specs);
    if (ana->parsed())
      return run_analyze(session_dir, config_file, report_out, plot_out, csv_out);
    if (rep->parsed()) return run_report(report_in);
  } catch (const rapd::Error& e) {
    std::cerr << "error[" << rapd::to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << e.what() << "\n";
    return 4;
  }
  return 4;
}
