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

#include "s5/curation/curation_config.hpp"

#include "s5/util/error.hpp"

namespace s5 {

void CurationConfig::validate() const {
  if (clusters == 0) throw ConfigError("curation.clusters must be positive");
  if (background_class < -1) throw ConfigError("curation.background_class must be >= -1");
  if (max_iterations == 0) throw ConfigError("curation.max_iterations must be positive");
  if (!(tolerance >= 0.0)) throw ConfigError("curation.tolerance must be nonnegative");
}

}  // namespace s5
