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

#include "s5/io/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "s5/util/error.hpp"

namespace s5 {
namespace {

constexpr std::uint8_t kMagic[4] = {'S', '5', 'T', 'N'};
constexpr std::uint8_t kVersion = 1;

template <class T>
void put_le(Bytes& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <class T>
T get_le(const std::uint8_t* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

void put_header(Bytes& out, DType dtype, const Shape& dims) {
  if (dims.size() > 255) throw ValidationError("tensor rank exceeds 255");
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(dims.size()));
  out.push_back(0);
  for (std::size_t d : dims) put_le<std::uint64_t>(out, d);
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::F32:
      return 4;
    case DType::F64:
      return 8;
    case DType::U16:
      return 2;
  }
  throw IoError("unknown dtype");
}

void encode_tensor(const Tensor& t, DType dtype, Bytes& out) {
  out.reserve(out.size() + 8 + 8 * t.rank() + t.numel() * dtype_size(dtype));
  put_header(out, dtype, t.shape());
  for (double v : t.values()) {
    switch (dtype) {
      case DType::F32:
        put_le<float>(out, static_cast<float>(v));
        break;
      case DType::F64:
        put_le<double>(out, v);
        break;
      case DType::U16:
        if (!(v >= 0.0 && v <= 65535.0) || std::floor(v) != v) {
          throw ValidationError("value " + std::to_string(v) + " is not a u16 label");
        }
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(v));
        break;
    }
  }
}

Bytes encode_tensor(const Tensor& t, DType dtype) {
  Bytes out;
  encode_tensor(t, dtype, out);
  return out;
}

Bytes encode_labels(const LabelMap& labels) {
  Bytes out;
  put_header(out, DType::U16, {labels.height, labels.width});
  for (std::uint16_t v : labels.labels) put_le<std::uint16_t>(out, v);
  return out;
}

DecodedTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("not an S5TN tensor container");
  }
  if (bytes[4] != kVersion) throw IoError("unsupported S5TN version " + std::to_string(bytes[4]));
  if (bytes[5] > 2) throw IoError("unknown S5TN dtype " + std::to_string(bytes[5]));
  const auto dtype = static_cast<DType>(bytes[5]);
  const std::size_t rank = bytes[6];
  std::size_t pos = 8;
  if (bytes.size() < pos + 8 * rank) throw IoError("truncated S5TN header");
  Shape dims(rank);
  for (std::size_t i = 0; i < rank; ++i, pos += 8) dims[i] = get_le<std::uint64_t>(bytes.data() + pos);
  const std::size_t n = shape_numel(dims);
  const std::size_t esize = dtype_size(dtype);
  if (bytes.size() - pos < n * esize) throw IoError("truncated S5TN payload");
  std::vector<double> values(n);
  const std::uint8_t* p = bytes.data() + pos;
  for (std::size_t i = 0; i < n; ++i, p += esize) {
    switch (dtype) {
      case DType::F32:
        values[i] = get_le<float>(p);
        break;
      case DType::F64:
        values[i] = get_le<double>(p);
        break;
      case DType::U16:
        values[i] = get_le<std::uint16_t>(p);
        break;
    }
  }
  return DecodedTensor{dtype, Tensor(std::move(dims), std::move(values)), pos + n * esize};
}

LabelMap decode_labels(std::span<const std::uint8_t> bytes) {
  DecodedTensor d = decode_tensor(bytes);
  if (d.dtype != DType::U16 || d.tensor.rank() != 2) {
    throw IoError("label file must hold a rank-2 u16 tensor");
  }
  LabelMap m(d.tensor.dim(0), d.tensor.dim(1));
  for (std::size_t i = 0; i < m.size(); ++i) m.labels[i] = static_cast<std::uint16_t>(d.tensor[i]);
  return m;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  write_file(path, encode_tensor(t, dtype));
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  try {
    return decode_tensor(b).tensor;
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_label_file(const std::filesystem::path& path, const LabelMap& labels) {
  write_file(path, encode_labels(labels));
}

LabelMap read_label_file(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  try {
    return decode_labels(b);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace s5
