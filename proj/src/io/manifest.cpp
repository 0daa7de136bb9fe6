// Copyright 2026 The S5 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "s5/io/manifest.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <span>
#include <sstream>

#include "s5/io/tensor_file.hpp"
#include "s5/util/error.hpp"

namespace s5 {
namespace {

using nlohmann::json;

std::string rebase(const std::string& rel, const std::filesystem::path& from,
                   const std::filesystem::path& to) {
  if (std::filesystem::weakly_canonical(from) == std::filesystem::weakly_canonical(to)) return rel;
  const auto abs = std::filesystem::weakly_canonical(from / rel);
  return std::filesystem::relative(abs, std::filesystem::weakly_canonical(to)).generic_string();
}

}  // namespace

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.dir = path.parent_path();
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError(where + ": record is not an object");
    for (const auto& [key, _] : j.items()) {
      if (key != "id" && key != "image" && key != "mask" && key != "dataset" && key != "split") {
        throw ValidationError(where + ": unknown key '" + key + "'");
      }
    }
    ManifestRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.image = j.at("image").get<std::string>();
      if (j.contains("mask") && !j["mask"].is_null()) r.mask = j["mask"].get<std::string>();
      r.dataset = j.value("dataset", std::string{});
      r.split = j.value("split", std::string{});
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!ids.insert(r.id).second) throw ValidationError(where + ": duplicate id '" + r.id + "'");
    m.records.push_back(std::move(r));
  }
  return m;
}

std::string manifest_line(const ManifestRecord& r) {
  json j;
  j["id"] = r.id;
  j["image"] = r.image;
  j["mask"] = r.mask ? json(*r.mask) : json(nullptr);
  j["dataset"] = r.dataset;
  j["split"] = r.split;
  return j.dump();
}

std::string manifest_text(const std::vector<ManifestRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += manifest_line(r);
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records,
                    const std::filesystem::path& source_dir) {
  std::filesystem::path target_dir = path.parent_path();
  if (target_dir.empty()) target_dir = ".";
  std::filesystem::path src = source_dir.empty() ? std::filesystem::path(".") : source_dir;
  std::vector<ManifestRecord> rebased = records;
  for (auto& r : rebased) {
    r.image = rebase(r.image, src, target_dir);
    if (r.mask) r.mask = rebase(*r.mask, src, target_dir);
  }
  const std::string text = manifest_text(rebased);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  write_manifest(path, manifest.records, manifest.dir);
}

}  // namespace s5
