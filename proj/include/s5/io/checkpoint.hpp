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

// Checkpoint container:
//
//   "S5CK" | version u8 = 1 | 3 zero bytes | header length u64 LE | header JSON
//   followed by one f64 S5TN record per parameter, in header order.
//
// The header is {"config": <ModelConfig>, "tensors": [<name>, ...]}.

#include <filesystem>
#include <span>

#include "s5/io/tensor_file.hpp"
#include "s5/model/segnet.hpp"

namespace s5 {

Bytes encode_checkpoint(const SegNet& net);
/// Throws ModelError when the parameter list or any shape disagrees with the
/// architecture in the header, IoError on a malformed container.
SegNet decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const SegNet& net);
SegNet load_checkpoint(const std::filesystem::path& path);

}  // namespace s5
