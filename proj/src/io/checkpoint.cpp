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

#include "s5/io/checkpoint.hpp"

#include <cstring>
#include <json.hpp>
#include <string>
#include <vector>

#include "s5/io/run_config.hpp"
#include "s5/util/error.hpp"

namespace s5 {
namespace {

constexpr std::uint8_t kMagic[4] = {'S', '5', 'C', 'K'};

}  // namespace

Bytes encode_checkpoint(const SegNet& net) {
  nlohmann::json header;
  header["config"] = to_json(net.config());
  std::vector<std::string> names;
  net.for_each_param([&](const std::string& name, const Tensor&) { names.push_back(name); });
  header["tensors"] = names;
  const std::string text = header.dump();

  Bytes out(kMagic, kMagic + 4);
  out.push_back(1);
  out.insert(out.end(), 3, 0);
  const std::uint64_t len = text.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  net.for_each_param([&](const std::string&, const Tensor& t) { encode_tensor(t, DType::F64, out); });
  return out;
}

SegNet decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("not an S5CK checkpoint");
  }
  if (bytes[4] != 1) throw IoError("unsupported checkpoint version " + std::to_string(bytes[4]));
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
  if (bytes.size() - 16 < len) throw IoError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint header: ") + e.what());
  }
  ModelConfig cfg;
  std::vector<std::string> names;
  try {
    cfg = model_config_from_json(header.at("config"));
    names = header.at("tensors").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw ModelError(std::string("checkpoint architecture: ") + e.what());
  }
  SegNet net(cfg, 0);
  std::vector<Tensor*> slots;
  std::vector<std::string> expected;
  net.for_each_param([&](const std::string& name, Tensor& t) {
    expected.push_back(name);
    slots.push_back(&t);
  });
  if (names != expected) {
    throw ModelError("checkpoint parameter list does not match its architecture");
  }
  std::size_t pos = 16 + len;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    DecodedTensor d = decode_tensor(bytes.subspan(pos));
    if (d.tensor.shape() != slots[i]->shape()) {
      throw ModelError("checkpoint tensor " + names[i] + " has shape " +
                       shape_str(d.tensor.shape()) + ", architecture expects " +
                       shape_str(slots[i]->shape()));
    }
    *slots[i] = std::move(d.tensor);
    pos += d.consumed;
  }
  if (pos != bytes.size()) throw IoError("trailing bytes after checkpoint tensors");
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const SegNet& net) {
  write_file(path, encode_checkpoint(net));
}

SegNet load_checkpoint(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return decode_checkpoint(b);
}

}  // namespace s5
