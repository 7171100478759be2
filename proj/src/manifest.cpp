/*
 * Copyright 2026 The dronefuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dronefuse/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "dronefuse/error.hpp"

namespace dronefuse {

using nlohmann::json;

std::filesystem::path DatasetManifest::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

void DatasetManifest::validate() const {
  for (const auto& r : records) {
    if (r.class_label >= std::size(kClassNames)) {
      throw ConfigError("manifest: record '" + r.id + "' has class_label " + std::to_string(r.class_label));
    }
    if ((r.detection_label == 1) != (r.class_label != 0) || r.detection_label > 1) {
      throw ConfigError("manifest: record '" + r.id + "' detection_label disagrees with class_label");
    }
    if (r.provenance != "real" && r.provenance != "synthetic") {
      throw ConfigError("manifest: record '" + r.id + "' has provenance '" + r.provenance + "'");
    }
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestRecord r;
      r.id = j.at("id").get<std::string>();
      r.acoustic_path = j.at("acoustic_path").get<std::string>();
      r.acoustic_offset = j.value("acoustic_offset", std::size_t{0});
      r.radar_path = j.at("radar_path").get<std::string>();
      r.radar_frame = j.value("radar_frame", std::size_t{0});
      r.class_label = j.at("class_label").get<std::size_t>();
      r.detection_label = j.at("detection_label").get<std::size_t>();
      r.provenance = j.value("provenance", std::string("real"));
      r.class_name = j.value("class_name", std::string(r.class_label < std::size(kClassNames)
                                                           ? kClassNames[r.class_label] : ""));
      r.radar_layout = j.value("radar_layout", std::string("cint16_le_iq"));
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  for (const auto& r : manifest.records) {
    // ordered_json keeps insertion order.
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["acoustic_path"] = r.acoustic_path;
    j["acoustic_offset"] = r.acoustic_offset;
    j["radar_path"] = r.radar_path;
    j["radar_frame"] = r.radar_frame;
    j["class_label"] = r.class_label;
    j["detection_label"] = r.detection_label;
    j["provenance"] = r.provenance;
    j["class_name"] = r.class_name;
    j["radar_layout"] = r.radar_layout;
    out << j.dump() << '\n';
  }
}

}  // namespace dronefuse
