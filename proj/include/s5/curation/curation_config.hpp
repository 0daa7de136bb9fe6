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

namespace s5 {

struct CurationConfig {
  std::size_t clusters = 8;   // M
  std::size_t budget = 0;     // B_u
  int background_class = 0;   // excluded from the entropy sum; -1 keeps every class
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;    // centroid shift that ends Lloyd iterations

  void validate() const;
  bool operator==(const CurationConfig&) const = default;
};

}  // namespace s5
