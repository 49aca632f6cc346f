#ifndef STORYSIM_MANIFEST_HPP
#define STORYSIM_MANIFEST_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "storysim/errors.hpp"
#include "storysim/formats.hpp"

namespace storysim {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a over the raw bytes; cheap and stable across platforms.
inline std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path + " for hashing");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct OutputRecord {
  std::string name;    // logical role, e.g. "observable"
  std::string path;    // as written
  std::string digest;  // hex FNV-1a of the file bytes
  std::uint64_t bytes = 0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

// Written next to a subcommand's outputs: enough to verify them later and to
// re-run the subcommand to byte-identical files.
struct RunManifest {
  std::string command;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  Json config;  // full config snapshot the run actually used
  std::vector<OutputRecord> outputs;
  std::vector<StageTiming> timings;

  void add_output(const std::string& name, const std::string& path) {
    OutputRecord rec;
    rec.name = name;
    rec.path = path;
    rec.digest = hex64(fnv1a_file(path));
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    rec.bytes = in ? static_cast<std::uint64_t>(in.tellg()) : 0;
    outputs.push_back(std::move(rec));
  }
};

inline Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["outputs"] = Json::array();
  for (const OutputRecord& rec : m.outputs)
    j["outputs"].push_back(
        {{"name", rec.name}, {"path", rec.path}, {"digest", rec.digest}, {"bytes", rec.bytes}});
  j["timings"] = Json::array();
  for (const StageTiming& t : m.timings)
    j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  return j;
}

inline void save_manifest(const std::string& path, const RunManifest& m) {
  jsonio::save_json_file(path, manifest_to_json(m));
}

inline RunManifest load_manifest(const std::string& path) {
  Json j = jsonio::load_json_file(path);
  RunManifest m;
  m.command = jsonio::as_string(jsonio::require(j, "command", path), path + ".command");
  m.version = jsonio::as_string(jsonio::require(j, "version", path), path + ".version");
  m.seed = jsonio::as_seed(jsonio::require(j, "seed", path), path + ".seed");
  m.config = jsonio::require(j, "config", path);
  if (j.contains("outputs")) {
    for (const Json& o : j["outputs"]) {
      OutputRecord rec;
      rec.name = jsonio::string_or(o, "name", path, "");
      rec.path = jsonio::string_or(o, "path", path, "");
      rec.digest = jsonio::string_or(o, "digest", path, "");
      rec.bytes = o.contains("bytes") ? o["bytes"].get<std::uint64_t>() : 0;
      m.outputs.push_back(std::move(rec));
    }
  }
  if (j.contains("timings")) {
    for (const Json& t : j["timings"]) {
      StageTiming st;
      st.stage = jsonio::string_or(t, "stage", path, "");
      st.seconds = jsonio::number_or(t, "seconds", path, 0.0);
      m.timings.push_back(std::move(st));
    }
  }
  return m;
}

}  // namespace storysim

#endif
