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

// Counter-based random streams (Philox4x32-10).
//
// A stream is addressed by (seed, stream id); the stream id is derived from
// whatever identifies the consumer, typically (patch id, step, slot). Streams
// are independent of each other and of the order in which they are created,
// so results do not depend on how work is spread across threads.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace s5 {

std::uint64_t hash_bytes(std::string_view bytes);
std::uint64_t mix64(std::uint64_t x);

/// Philox4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Stream for one (item, step, slot) tuple.
  static RngStream for_item(std::uint64_t seed, std::string_view item, std::uint64_t step,
                            std::uint32_t slot);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();
  /// Normal(0, sigma) redrawn until it falls inside +-2 sigma.
  double truncated_normal(double sigma);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int available_ = 0;
};

}  // namespace s5
