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

#pragma once

// JSON-lines index of patches. One record per line:
//   {"dataset": ..., "id": ..., "image": ..., "mask": ... | null, "split": ...}
// Image and mask paths are relative to the manifest's own directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace s5 {

struct ManifestRecord {
  std::string id;
  std::string image;
  std::optional<std::string> mask;
  std::string dataset;
  std::string split;

  bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
  std::filesystem::path dir;  // base for relative paths
  std::vector<ManifestRecord> records;

  std::filesystem::path image_path(const ManifestRecord& r) const { return dir / r.image; }
  std::filesystem::path mask_path(const ManifestRecord& r) const { return dir / *r.mask; }
  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Throws IoError when unreadable, ValidationError on malformed lines,
/// unknown keys, or duplicate ids.
Manifest read_manifest(const std::filesystem::path& path);

std::string manifest_line(const ManifestRecord& r);
std::string manifest_text(const std::vector<ManifestRecord>& records);

/// Writes `records` whose paths are relative to `source_dir`, rebasing them
/// onto the directory of `path`.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records,
                    const std::filesystem::path& source_dir);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace s5
