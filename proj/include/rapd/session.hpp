#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rapd/json_canon.hpp"
#include "rapd/pgm.hpp"
#include "rapd/protocol.hpp"

namespace rapd {

constexpr int kManifestSchemaVersion = 1;

struct FrameRef {
  std::string path;  // relative to the session directory
  double timestamp_ms = 0.0;
};

// On-disk session: manifest.json plus one PGM per frame. Subject metadata is
// an opaque string map carried through round-trips, never interpreted.
struct SessionManifest {
  int schema_version = kManifestSchemaVersion;
  std::string session_id;
  StimulusProtocol protocol;
  double frame_rate_hz = 0.0;
  std::vector<FrameRef> left_frames;
  std::vector<FrameRef> right_frames;
  std::map<std::string, std::string> subject;
};

namespace detail {

inline json require(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::ParseError, ctx + ": missing key '" + key + "'");
  return *it;
}

inline Eye eye_from_string(const std::string& s, const std::string& ctx) {
  if (s == "L") return Eye::Left;
  if (s == "R") return Eye::Right;
  fail(ErrorCode::ParseError, ctx + ": eye must be \"L\" or \"R\", got \"" + s + "\"");
}

inline LedColor color_from_string(const std::string& s, const std::string& ctx) {
  if (s == "R") return LedColor::Red;
  if (s == "G") return LedColor::Green;
  if (s == "B") return LedColor::Blue;
  if (s == "W") return LedColor::White;
  fail(ErrorCode::ParseError, ctx + ": color must be one of R/G/B/W, got \"" + s + "\"");
}

}  // namespace detail

inline json protocol_to_json(const StimulusProtocol& p) {
  json events = json::array();
  for (const StimulusEvent& e : p.events) {
    events.push_back({{"eye", std::string(1, to_char(e.eye))},
                      {"color", std::string(1, to_char(e.color))},
                      {"intensity", e.intensity},
                      {"t_on_ms", e.t_on_ms},
                      {"t_off_ms", e.t_off_ms}});
  }
  return {{"events", events}, {"session_end_ms", p.session_end_ms}};
}

inline StimulusProtocol protocol_from_json(const json& j) {
  StimulusProtocol p;
  for (const json& ej : detail::require(j, "events", "protocol")) {
    StimulusEvent e;
    e.eye = detail::eye_from_string(detail::require(ej, "eye", "event").get<std::string>(),
                                    "event");
    e.color = detail::color_from_string(
        detail::require(ej, "color", "event").get<std::string>(), "event");
    e.intensity = detail::require(ej, "intensity", "event").get<double>();
    e.t_on_ms = detail::require(ej, "t_on_ms", "event").get<double>();
    e.t_off_ms = detail::require(ej, "t_off_ms", "event").get<double>();
    p.events.push_back(e);
  }
  p.session_end_ms = detail::require(j, "session_end_ms", "protocol").get<double>();
  return p;
}

inline json manifest_to_json(const SessionManifest& m) {
  auto frames_json = [](const std::vector<FrameRef>& refs) {
    json arr = json::array();
    for (const FrameRef& r : refs) arr.push_back({{"path", r.path}, {"t_ms", r.timestamp_ms}});
    return arr;
  };
  json subject = json::object();
  for (const auto& [k, v] : m.subject) subject[k] = v;
  return {{"schema_version", m.schema_version},
          {"session_id", m.session_id},
          {"protocol", protocol_to_json(m.protocol)},
          {"frame_rate_hz", m.frame_rate_hz},
          {"frames",
           {{"left", frames_json(m.left_frames)}, {"right", frames_json(m.right_frames)}}},
          {"subject", subject}};
}

inline SessionManifest manifest_from_json(const json& j) {
  SessionManifest m;
  m.schema_version = detail::require(j, "schema_version", "manifest").get<int>();
  if (m.schema_version != kManifestSchemaVersion)
    fail(ErrorCode::SchemaMismatch,
         "manifest schema_version " + std::to_string(m.schema_version) + ", expected " +
             std::to_string(kManifestSchemaVersion));
  m.session_id = detail::require(j, "session_id", "manifest").get<std::string>();
  m.protocol = protocol_from_json(detail::require(j, "protocol", "manifest"));
  m.frame_rate_hz = detail::require(j, "frame_rate_hz", "manifest").get<double>();
  const json frames = detail::require(j, "frames", "manifest");
  auto parse_refs = [](const json& arr, const char* side) {
    std::vector<FrameRef> refs;
    for (const json& fj : arr) {
      FrameRef r;
      r.path = detail::require(fj, "path", side).get<std::string>();
      r.timestamp_ms = detail::require(fj, "t_ms", side).get<double>();
      refs.push_back(std::move(r));
    }
    return refs;
  };
  m.left_frames = parse_refs(detail::require(frames, "left", "frames"), "left frame");
  m.right_frames = parse_refs(detail::require(frames, "right", "frames"), "right frame");
  if (j.contains("subject"))
    for (auto it = j["subject"].begin(); it != j["subject"].end(); ++it)
      m.subject[it.key()] = it.value().get<std::string>();
  return m;
}

inline void write_manifest(const std::filesystem::path& session_dir, const SessionManifest& m) {
  std::filesystem::create_directories(session_dir);
  std::ofstream out(session_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::ParseError, "cannot write manifest.json");
  out << canonical_dump(manifest_to_json(m));
}

// Loads and validates manifest.json: schema version, both eyes present,
// strictly increasing timestamps per eye, every referenced frame file on
// disk. PGM parsing happens lazily in load_frame.
inline SessionManifest read_session(const std::filesystem::path& session_dir) {
  const std::filesystem::path manifest_path = session_dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, manifest_path.string() + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, manifest_path.string() + ": " + e.what());
  }
  SessionManifest m = manifest_from_json(j);

  if (m.left_frames.empty() || m.right_frames.empty())
    fail(ErrorCode::ParseError, "manifest must list frames for both eyes");
  if (m.frame_rate_hz <= 0.0) fail(ErrorCode::ParseError, "frame_rate_hz must be > 0");
  for (const std::vector<FrameRef>* side : {&m.left_frames, &m.right_frames}) {
    for (std::size_t i = 1; i < side->size(); ++i)
      if ((*side)[i].timestamp_ms <= (*side)[i - 1].timestamp_ms)
        fail(ErrorCode::NonMonotonicTimestamps,
             "frame timestamps not strictly increasing at " + (*side)[i].path);
    for (const FrameRef& r : *side)
      if (!std::filesystem::exists(session_dir / r.path))
        fail(ErrorCode::MissingFrame, r.path);
  }
  return m;
}

inline Frame load_frame(const std::filesystem::path& session_dir, const FrameRef& ref, Eye eye) {
  Frame f = read_pgm(session_dir / ref.path);
  f.timestamp_ms = ref.timestamp_ms;
  f.eye = eye;
  return f;
}

}  // namespace rapd
