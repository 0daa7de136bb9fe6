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

// Single-tensor binary container:
//
//   offset 0  magic "S5TN"
//          4  version (u8) = 1
//          5  dtype   (u8): 0 = f32, 1 = f64, 2 = u16
//          6  rank    (u8)
//          7  reserved (u8) = 0
//          8  dims: rank x u64, little endian
//          .  payload: row-major little-endian values
//
// Values are always handled as doubles in memory; f32 and u16 payloads are
// widened on read and narrowed on write.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "s5/tensor/label_map.hpp"
#include "s5/tensor/tensor.hpp"

namespace s5 {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U16 = 2 };

std::size_t dtype_size(DType dtype);

using Bytes = std::vector<std::uint8_t>;

/// Throws ValidationError when a u16 payload is asked for values that are not
/// integers in [0, 65535].
void encode_tensor(const Tensor& t, DType dtype, Bytes& out);
Bytes encode_tensor(const Tensor& t, DType dtype);
Bytes encode_labels(const LabelMap& labels);

struct DecodedTensor {
  DType dtype;
  Tensor tensor;
  std::size_t consumed;  // bytes read from the input span
};

/// Throws IoError on a malformed container.
DecodedTensor decode_tensor(std::span<const std::uint8_t> bytes);
LabelMap decode_labels(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never observe a
/// partial file.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void write_tensor_file(const std::filesystem::path& path, const Tensor& t, DType dtype);
Tensor read_tensor_file(const std::filesystem::path& path);
void write_label_file(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_label_file(const std::filesystem::path& path);

}  // namespace s5
