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

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "s5/model/config.hpp"
#include "s5/tensor/graph.hpp"
#include "s5/tensor/tensor.hpp"

namespace s5 {

/// y = x * weight + bias, weight stored [in x out].
struct Linear {
  Tensor weight;
  Tensor bias;

  Var apply(Graph& g, Var x);
};

struct NormParams {
  Tensor gain;
  Tensor bias;
};

struct BlockParams {
  NormParams norm1;
  Linear query, key, value, out;
  NormParams norm2;
  Linear ffn_in;
  // D -> C without experts, D -> (1 - alpha) C with them.
  Linear shared_expert;
  // One D -> alpha C map per dataset; empty without experts.
  std::vector<Linear> specific_experts;
};

struct DecoderParams {
  // d -> patch_size^2 * K_t
  Linear proj;
};

inline constexpr double kNormEps = 1e-6;

/// Small ViT-style segmentation network: linear patch embedding plus learned
/// positions, pre-norm transformer blocks whose FFN can be split into a shared
/// expert and per-dataset specific experts, a final norm, and one linear
/// patch-wise decoder per dataset.
class SegNet {
 public:
  /// Truncated-normal (sigma 0.02) projections and positions, zero biases,
  /// unit norm gains; every buffer draws from its own stream keyed by name.
  SegNet(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  Var patch_embed(Graph& g, const Tensor& image);
  Var mhsa(Graph& g, Var tokens, std::size_t block);
  /// FFN half of a block including its residual. With experts enabled the
  /// second projection is concat(shared, specific[dataset_id]).
  Var ffn_moe(Graph& g, Var tokens, std::size_t block, std::size_t dataset_id);
  /// Token features after the last block and the final norm, [N x d].
  Var encode(Graph& g, const Tensor& image, std::size_t dataset_id);
  /// Per-pixel logits [H*W x K_t], row-major over pixels.
  Var decode(Graph& g, Var tokens, std::size_t dataset_id);
  Var forward(Graph& g, const Tensor& image, std::size_t dataset_id);

  std::vector<BlockParams>& blocks() { return blocks_; }
  const std::vector<BlockParams>& blocks() const { return blocks_; }
  std::vector<DecoderParams>& decoders() { return decoders_; }
  const std::vector<DecoderParams>& decoders() const { return decoders_; }
  Linear& patch_proj() { return patch_proj_; }
  Tensor& pos_embed() { return pos_embed_; }
  NormParams& final_norm() { return final_norm_; }

  using ParamVisitor = std::function<void(const std::string& name, Tensor& t)>;
  using ConstParamVisitor = std::function<void(const std::string& name, const Tensor& t)>;
  /// Visits every parameter buffer in a fixed order.
  void for_each_param(const ParamVisitor& fn);
  void for_each_param(const ConstParamVisitor& fn) const;
  Tensor* find_param(std::string_view name);

  void zero_grad();

 private:
  void check_dataset(std::size_t dataset_id) const;
  template <class Self, class Fn>
  static void visit(Self& self, Fn&& fn);

  ModelConfig config_;
  Linear patch_proj_;
  Tensor pos_embed_;
  std::vector<BlockParams> blocks_;
  NormParams final_norm_;
  std::vector<DecoderParams> decoders_;
  std::vector<std::uint32_t> patch_index_;
};

/// Parameter visitor names belong to one of these groups.
enum class ParamGroup { Backbone, SpecificExpert, Decoder };
ParamGroup param_group(std::string_view name);

/// Builds the expert-split version of a plain-FFN network with the same
/// decoders. The shared expert takes the first (1 - alpha) C output channels
/// of each block's second FFN projection; every specific expert starts from the
/// remaining alpha C channels, so the converted network computes the same
/// function for every dataset.
SegNet convert_to_moe(const SegNet& plain, double alpha);

/// Copies every buffer whose name and shape match; returns how many were
/// copied.
std::size_t copy_matching_params(const SegNet& from, SegNet& to);

}  // namespace s5
