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

#include "s5/finetune/finetune_config.hpp"

#include <algorithm>
#include <string>

#include "s5/util/error.hpp"

namespace s5 {

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::SDF:
      return "SDF";
    case Regime::MDF:
      return "MDF";
    case Regime::MoEMDF:
      return "MoE-MDF";
  }
  return "?";
}

Regime parse_regime(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
  if (t == "SDF") return Regime::SDF;
  if (t == "MDF") return Regime::MDF;
  if (t == "MOE-MDF" || t == "MOE_MDF" || t == "MOEMDF") return Regime::MoEMDF;
  throw ConfigError("unknown regime '" + std::string(text) + "' (expected SDF, MDF or MoE-MDF)");
}

void FinetuneConfig::validate() const {
  if (batch == 0) throw ConfigError("finetune.batch must be positive");
  if (!(lr > 0.0)) throw ConfigError("finetune.lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("finetune.weight_decay must be nonnegative");
}

}  // namespace s5
