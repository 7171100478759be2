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
#include "dronefuse/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "dronefuse/error.hpp"

namespace dronefuse::nn {
namespace {

using nlohmann::json;

std::filesystem::path blob_path(const std::filesystem::path& manifest_path) {
  auto p = manifest_path;
  p.replace_extension(".bin");
  return p;
}

void put_f64(std::vector<char>& out, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

double get_f64(const char* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& manifest_path) {
  json tensors = json::array();
  std::vector<char> blob;
  blob.reserve(store.element_count() * 8);
  for (const auto& p : store) {
    tensors.push_back({{"name", p.name},
                       {"shape", p.value.shape},
                       {"dtype", "f64le"},
                       {"offset", blob.size()},
                       {"trainable", p.trainable}});
    for (double v : p.value.data) put_f64(blob, v);
  }
  const auto bin = blob_path(manifest_path);
  json manifest = {{"format", "dronefuse-checkpoint-v1"},
                   {"blob", bin.filename().string()},
                   {"blob_bytes", blob.size()},
                   {"tensors", tensors}};
  {
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint blob '" + bin.string() + "'");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write checkpoint manifest '" + manifest_path.string() + "'");
  out << manifest.dump(2) << '\n';
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open checkpoint manifest '" + manifest_path.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  const auto bin = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
  std::ifstream bin_in(bin, std::ios::binary);
  if (!bin_in) throw IoError("cannot open checkpoint blob '" + bin.string() + "'");
  const std::vector<char> blob((std::istreambuf_iterator<char>(bin_in)), std::istreambuf_iterator<char>());
  std::vector<NamedTensor> out;
  for (const auto& t : manifest.at("tensors")) {
    if (t.at("dtype").get<std::string>() != "f64le") {
      throw ParseError("checkpoint: unsupported dtype for '" + t.at("name").get<std::string>() + "'");
    }
    NamedTensor nt;
    nt.name = t.at("name").get<std::string>();
    nt.tensor = Tensor(t.at("shape").get<Shape>());
    const auto offset = t.at("offset").get<std::size_t>();
    if (offset + nt.tensor.size() * 8 > blob.size()) {
      throw ParseError("checkpoint: tensor '" + nt.name + "' extends past end of blob");
    }
    for (std::size_t i = 0; i < nt.tensor.size(); ++i) nt.tensor[i] = get_f64(&blob[offset + 8 * i]);
    out.push_back(std::move(nt));
  }
  return out;
}

void load_checkpoint(ParameterStore& store, const std::filesystem::path& manifest_path) {
  const auto tensors = read_checkpoint(manifest_path);
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& nt : tensors) by_name.emplace(nt.name, &nt.tensor);
  for (auto& p : store) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw ParseError("checkpoint: missing parameter '" + p.name + "'");
    if (it->second->shape != p.value.shape) {
      throw DimensionError("checkpoint: shape mismatch for '" + p.name + "': " + to_string(it->second->shape) +
                           " vs " + to_string(p.value.shape));
    }
    p.value = *it->second;
  }
}

}  // namespace dronefuse::nn
