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

#include "s5/model/segnet.hpp"

#include <cmath>
#include <string>

#include "s5/util/error.hpp"
#include "s5/util/rng.hpp"

namespace s5 {
namespace {

constexpr double kInitSigma = 0.02;

Tensor trunc_normal(Shape shape, std::uint64_t seed, const std::string& name) {
  Tensor t(std::move(shape));
  RngStream rng = RngStream::for_item(seed, name, 0, 0);
  for (double& v : t.values()) v = rng.truncated_normal(kInitSigma);
  return t;
}

Linear make_linear(std::size_t in, std::size_t out, std::uint64_t seed, const std::string& name) {
  return Linear{trunc_normal({in, out}, seed, name + ".weight"), Tensor({out}, 0.0)};
}

NormParams make_norm(std::size_t d) { return NormParams{Tensor({d}, 1.0), Tensor({d}, 0.0)}; }

}  // namespace

template <class Self, class Fn>
void SegNet::visit(Self& m, Fn&& fn) {
  auto lin = [&](const std::string& name, auto& l) {
    fn(name + ".weight", l.weight);
    fn(name + ".bias", l.bias);
  };
  auto norm = [&](const std::string& name, auto& n) {
    fn(name + ".gain", n.gain);
    fn(name + ".bias", n.bias);
  };
  lin("patch_embed", m.patch_proj_);
  fn("pos_embed", m.pos_embed_);
  for (std::size_t b = 0; b < m.blocks_.size(); ++b) {
    auto& blk = m.blocks_[b];
    const std::string p = "blocks." + std::to_string(b);
    norm(p + ".norm1", blk.norm1);
    lin(p + ".attn.query", blk.query);
    lin(p + ".attn.key", blk.key);
    lin(p + ".attn.value", blk.value);
    lin(p + ".attn.out", blk.out);
    norm(p + ".norm2", blk.norm2);
    lin(p + ".ffn.in", blk.ffn_in);
    lin(p + ".ffn.shared", blk.shared_expert);
    for (std::size_t t = 0; t < blk.specific_experts.size(); ++t) {
      lin(p + ".ffn.specific." + std::to_string(t), blk.specific_experts[t]);
    }
  }
  norm("norm", m.final_norm_);
  for (std::size_t t = 0; t < m.decoders_.size(); ++t) {
    lin("decoders." + std::to_string(t), m.decoders_[t].proj);
  }
}

Var Linear::apply(Graph& g, Var x) {
  return g.add_row(g.matmul(x, g.param(weight)), g.param(bias));
}

SegNet::SegNet(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.embed_dim, p = config_.patch_size, D = config_.ffn_hidden;
  patch_proj_ = make_linear(p * p * 3, d, seed, "patch_embed");
  pos_embed_ = trunc_normal({config_.tokens(), d}, seed, "pos_embed");
  blocks_.resize(config_.depth);
  for (std::size_t b = 0; b < config_.depth; ++b) {
    auto& blk = blocks_[b];
    const std::string pre = "blocks." + std::to_string(b);
    blk.norm1 = make_norm(d);
    blk.query = make_linear(d, d, seed, pre + ".attn.query");
    blk.key = make_linear(d, d, seed, pre + ".attn.key");
    blk.value = make_linear(d, d, seed, pre + ".attn.value");
    blk.out = make_linear(d, d, seed, pre + ".attn.out");
    blk.norm2 = make_norm(d);
    blk.ffn_in = make_linear(d, D, seed, pre + ".ffn.in");
    blk.shared_expert = make_linear(D, config_.shared_width(), seed, pre + ".ffn.shared");
    if (config_.moe_enabled) {
      for (std::size_t t = 0; t < config_.num_datasets; ++t) {
        blk.specific_experts.push_back(make_linear(
            D, config_.specific_width(), seed, pre + ".ffn.specific." + std::to_string(t)));
      }
    }
  }
  final_norm_ = make_norm(d);
  for (std::size_t t = 0; t < config_.num_datasets; ++t) {
    decoders_.push_back(DecoderParams{
        make_linear(d, p * p * config_.classes_for(t), seed, "decoders." + std::to_string(t))});
  }

  // Patch gather: token n = (gy, gx) takes pixels in (py, px, channel) order.
  const std::size_t G = config_.grid(), S = config_.image_size;
  patch_index_.reserve(S * S * 3);
  for (std::size_t gy = 0; gy < G; ++gy)
    for (std::size_t gx = 0; gx < G; ++gx)
      for (std::size_t py = 0; py < p; ++py)
        for (std::size_t px = 0; px < p; ++px)
          for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t y = gy * p + py, x = gx * p + px;
            patch_index_.push_back(static_cast<std::uint32_t>((y * S + x) * 3 + c));
          }
}

void SegNet::check_dataset(std::size_t dataset_id) const {
  if (dataset_id >= config_.num_datasets) {
    throw RoutingError("dataset id " + std::to_string(dataset_id) + " outside [0, " +
                       std::to_string(config_.num_datasets) + ")");
  }
}

Var SegNet::patch_embed(Graph& g, const Tensor& image) {
  const std::size_t S = config_.image_size;
  if (image.shape() != Shape{S, S, 3}) {
    throw DimensionError("patch_embed: expected image " + shape_str({S, S, 3}) + ", got " +
                         shape_str(image.shape()));
  }
  const std::size_t p = config_.patch_size;
  Var pixels = g.input(image);
  Var patches = g.gather(pixels, patch_index_, {config_.tokens(), p * p * 3});
  Var tokens = patch_proj_.apply(g, patches);
  return g.add(tokens, g.param(pos_embed_));
}

Var SegNet::mhsa(Graph& g, Var tokens, std::size_t block) {
  BlockParams& blk = blocks_.at(block);
  const std::size_t d = config_.embed_dim, H = config_.heads, dh = d / H;
  Var x = g.layer_norm(tokens, g.param(blk.norm1.gain), g.param(blk.norm1.bias), kNormEps);
  Var q = blk.query.apply(g, x);
  Var k = blk.key.apply(g, x);
  Var v = blk.value.apply(g, x);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(H);
  for (std::size_t h = 0; h < H; ++h) {
    Var qh = H == 1 ? q : g.slice_cols(q, h * dh, dh);
    Var kh = H == 1 ? k : g.slice_cols(k, h * dh, dh);
    Var vh = H == 1 ? v : g.slice_cols(v, h * dh, dh);
    Var attn = g.softmax_rows(g.scale(g.matmul_nt(qh, kh), inv_sqrt));
    heads.push_back(g.matmul(attn, vh));
  }
  Var merged = H == 1 ? heads[0] : g.concat_channels(heads);
  return g.add(tokens, blk.out.apply(g, merged));
}

Var SegNet::ffn_moe(Graph& g, Var tokens, std::size_t block, std::size_t dataset_id) {
  check_dataset(dataset_id);
  BlockParams& blk = blocks_.at(block);
  Var x = g.layer_norm(tokens, g.param(blk.norm2.gain), g.param(blk.norm2.bias), kNormEps);
  Var hidden = g.relu(blk.ffn_in.apply(g, x));
  Var out = blk.shared_expert.apply(g, hidden);
  if (config_.moe_enabled) {
    Var specific = blk.specific_experts.at(dataset_id).apply(g, hidden);
    out = g.concat_channels(out, specific);
  }
  return g.add(tokens, out);
}

Var SegNet::encode(Graph& g, const Tensor& image, std::size_t dataset_id) {
  check_dataset(dataset_id);
  Var x = patch_embed(g, image);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    x = mhsa(g, x, b);
    x = ffn_moe(g, x, b, dataset_id);
  }
  return g.layer_norm(x, g.param(final_norm_.gain), g.param(final_norm_.bias), kNormEps);
}

Var SegNet::decode(Graph& g, Var tokens, std::size_t dataset_id) {
  if (dataset_id >= decoders_.size()) {
    throw RoutingError("no decoder for dataset " + std::to_string(dataset_id));
  }
  const std::size_t p = config_.patch_size, G = config_.grid(), S = config_.image_size;
  const std::size_t K = config_.classes_for(dataset_id);
  Var per_token = decoders_[dataset_id].proj.apply(g, tokens);
  std::vector<std::uint32_t> index(S * S * K);
  for (std::size_t y = 0; y < S; ++y)
    for (std::size_t x = 0; x < S; ++x) {
      const std::size_t token = (y / p) * G + x / p;
      const std::size_t within = ((y % p) * p + x % p) * K;
      for (std::size_t k = 0; k < K; ++k) {
        index[(y * S + x) * K + k] = static_cast<std::uint32_t>(token * p * p * K + within + k);
      }
    }
  return g.gather(per_token, std::move(index), {S * S, K});
}

Var SegNet::forward(Graph& g, const Tensor& image, std::size_t dataset_id) {
  return decode(g, encode(g, image, dataset_id), dataset_id);
}

void SegNet::for_each_param(const ParamVisitor& fn) { visit(*this, fn); }

void SegNet::for_each_param(const ConstParamVisitor& fn) const { visit(*this, fn); }

Tensor* SegNet::find_param(std::string_view name) {
  Tensor* found = nullptr;
  for_each_param([&](const std::string& n, Tensor& t) {
    if (n == name) found = &t;
  });
  return found;
}

void SegNet::zero_grad() {
  for_each_param([](const std::string&, Tensor& t) { t.clear_grad(); });
}

ParamGroup param_group(std::string_view name) {
  if (name.starts_with("decoders.")) return ParamGroup::Decoder;
  if (name.find(".ffn.specific.") != std::string_view::npos) return ParamGroup::SpecificExpert;
  return ParamGroup::Backbone;
}

SegNet convert_to_moe(const SegNet& plain, double alpha) {
  if (plain.config().moe_enabled) throw ConfigError("network already carries experts");
  ModelConfig cfg = plain.config();
  cfg.moe_enabled = true;
  cfg.alpha = alpha;
  SegNet moe(cfg, 0);
  copy_matching_params(plain, moe);
  const std::size_t D = cfg.ffn_hidden;
  const std::size_t shared = cfg.shared_width(), specific = cfg.specific_width();
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    const Linear& src = plain.blocks()[b].shared_expert;
    BlockParams& dst = moe.blocks()[b];
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = 0; j < shared; ++j) dst.shared_expert.weight.at(i, j) = src.weight.at(i, j);
    for (std::size_t j = 0; j < shared; ++j) dst.shared_expert.bias[j] = src.bias[j];
    for (Linear& e : dst.specific_experts) {
      for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < specific; ++j) e.weight.at(i, j) = src.weight.at(i, shared + j);
      for (std::size_t j = 0; j < specific; ++j) e.bias[j] = src.bias[shared + j];
    }
  }
  return moe;
}

std::size_t copy_matching_params(const SegNet& from, SegNet& to) {
  std::size_t copied = 0;
  from.for_each_param([&](const std::string& name, const Tensor& src) {
    Tensor* dst = to.find_param(name);
    if (dst != nullptr && dst->shape() == src.shape()) {
      *dst = Tensor(src.shape(), std::vector<double>(src.values().begin(), src.values().end()));
      ++copied;
    }
  });
  return copied;
}

}  // namespace s5
