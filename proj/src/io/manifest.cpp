#include "lgan/io/manifest.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace lgan::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json entry_to_json(const scene::ManifestEntry& e) {
  json j = e.extra_json.empty() ? json::object() : json::parse(e.extra_json);
  j["image"] = e.image;
  j["mask_classes"] = e.mask_classes;
  j["amodal_masks"] = e.amodal_paths;
  j["visible_masks"] = e.visible_paths;
  j["label_vector"] = e.label_vector;
  j["ordering"] = e.ordering;
  j["seed"] = e.seed;
  return j;
}

scene::ManifestEntry entry_from_json(const json& j) {
  scene::ManifestEntry e;
  e.image = j.at("image").get<std::string>();
  e.mask_classes = j.at("mask_classes").get<std::vector<int64_t>>();
  e.amodal_paths = j.at("amodal_masks").get<std::vector<std::string>>();
  e.visible_paths = j.at("visible_masks").get<std::vector<std::string>>();
  e.label_vector = j.at("label_vector").get<std::vector<int>>();
  e.ordering = j.at("ordering").get<std::vector<int64_t>>();
  e.seed = j.at("seed").get<uint64_t>();
  json extra = j;
  for (const char* key : {"image", "mask_classes", "amodal_masks", "visible_masks", "label_vector",
                          "ordering", "seed"}) {
    extra.erase(key);
  }
  if (!extra.empty()) e.extra_json = extra.dump();
  return e;
}

}  // namespace

scene::DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path);
  scene::DatasetManifest m;
  std::string line;
  int64_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest: malformed JSON at line " + std::to_string(line_no) +
                               " of " + path + ": " + e.what());
    }
    try {
      if (!have_header) {
        m.split = j.value("split", "train");
        m.config_hash = j.value("config_hash", static_cast<uint64_t>(0));
        have_header = true;
      } else {
        m.entries.push_back(entry_from_json(j));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest: bad entry at line " + std::to_string(line_no) + " of " +
                               path + ": " + e.what());
    }
  }
  return m;
}

void write_manifest(const scene::DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  json header = {{"split", manifest.split},
                 {"config_hash", manifest.config_hash},
                 {"n", manifest.entries.size()}};
  out << header.dump() << "\n";
  for (const auto& e : manifest.entries) out << entry_to_json(e).dump() << "\n";
  if (!out) throw std::runtime_error("manifest: write failed for " + path);
}

void validate_manifest_files(const scene::DatasetManifest& manifest, const std::string& base_dir) {
  auto check = [&](const std::string& rel) {
    const fs::path p = fs::path(base_dir) / rel;
    if (!fs::exists(p)) throw std::runtime_error("manifest: missing file " + p.string());
  };
  for (const auto& e : manifest.entries) {
    check(e.image);
    for (const auto& p : e.amodal_paths) check(p);
    for (const auto& p : e.visible_paths) check(p);
  }
}

}  // namespace lgan::io
