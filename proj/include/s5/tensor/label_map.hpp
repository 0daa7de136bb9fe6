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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace s5 {

inline constexpr std::uint16_t kIgnoreLabel = 255;

/// Per-pixel class indices, row-major.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint16_t> labels;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::uint16_t fill = 0)
      : height(h), width(w), labels(h * w, fill) {}

  std::uint16_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  std::uint16_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  std::size_t size() const { return labels.size(); }

  bool operator==(const LabelMap&) const = default;
};

}  // namespace s5
