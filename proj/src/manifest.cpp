#include "notekit/manifest.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "notekit/config.hpp"

namespace notekit {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot digest missing file: " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  std::string out(16, '0');
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xf];
    hash >>= 4;
  }
  return out;
}

void RunManifest::record(StageRecord stage) {
  auto it = std::find_if(stages.begin(), stages.end(),
                         [&](const StageRecord& s) { return s.name == stage.name; });
  if (it != stages.end()) *it = std::move(stage);
  else stages.push_back(std::move(stage));
}

const StageRecord* RunManifest::stage(const std::string& name) const {
  auto it = std::find_if(stages.begin(), stages.end(),
                         [&](const StageRecord& s) { return s.name == name; });
  return it == stages.end() ? nullptr : &*it;
}

void RunManifest::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["config_hash"] = config_hash;
  j["inputs"] = input_digests;
  j["seeds"] = seeds;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages) {
    nlohmann::json js;
    js["name"] = s.name;
    js["wall_ms"] = s.wall_ms;
    js["outputs"] = nlohmann::json::array();
    for (const auto& a : s.outputs)
      js["outputs"].push_back(
          {{"path", a.path}, {"digest", a.digest}, {"rows", a.rows}});
    j["stages"].push_back(std::move(js));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << j.dump(2) << '\n';
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.config_hash = j.value("config_hash", "");
  if (j.contains("inputs"))
    m.input_digests = j["inputs"].get<std::map<std::string, std::string>>();
  if (j.contains("seeds"))
    m.seeds = j["seeds"].get<std::map<std::string, std::uint64_t>>();
  for (const auto& js : j.value("stages", nlohmann::json::array())) {
    StageRecord s;
    s.name = js.value("name", "");
    s.wall_ms = js.value("wall_ms", 0.0);
    for (const auto& ja : js.value("outputs", nlohmann::json::array())) {
      ArtifactRecord a;
      a.path = ja.value("path", "");
      a.digest = ja.value("digest", "");
      a.rows = ja.value("rows", -1);
      s.outputs.push_back(std::move(a));
    }
    m.stages.push_back(std::move(s));
  }
  return m;
}

}  // namespace notekit
