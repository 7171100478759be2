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
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace dronefuse {

inline constexpr const char* kClassNames[] = {"non_drone", "matrice_300_rtk", "mavic_2_enterprise_dual",
                                              "phantom_4_pro_plus", "phantom_4_pro_v2"};

struct ManifestRecord {
  std::string id;
  std::string acoustic_path;  // relative to the manifest directory unless absolute
  std::size_t acoustic_offset = 0;
  std::string radar_path;
  std::size_t radar_frame = 0;
  std::size_t class_label = 0;
  std::size_t detection_label = 0;
  std::string provenance = "synthetic";  // real | synthetic
  std::string class_name;
  std::string radar_layout = "cint16_le_iq";
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
  /// Throws ConfigError when labels disagree (detection 1 iff drone class).
  void validate() const;
};

/// JSON-lines, one record per line.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace dronefuse
