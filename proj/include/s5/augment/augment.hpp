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

// Weak views carry all geometric randomness (scale, crop, right-angle
// rotation, flips); strong views add photometric changes on top and never move
// a pixel, so pseudo-labels computed on the weak view stay aligned. CutMix
// works on a whole unlabeled batch and mixes labels and confidences with the
// same rectangle.

#include <array>
#include <cstdint>
#include <optional>
#include <json.hpp>
#include <vector>

#include "s5/tensor/label_map.hpp"
#include "s5/tensor/tensor.hpp"
#include "s5/util/rng.hpp"

namespace s5 {

struct CutBox {
  std::size_t y = 0, x = 0, height = 0, width = 0;
  bool contains(std::size_t i, std::size_t j) const {
    return i >= y && i < y + height && j >= x && j < x + width;
  }
  bool operator==(const CutBox&) const = default;
};

struct AugRecord {
  // geometry
  double scale = 1.0;
  std::size_t scaled_size = 0;  // 0 means the input size
  // Top-left of the output window in scaled-image coordinates; negative when
  // the scaled image is smaller than the output and gets padded.
  long crop_y = 0, crop_x = 0;
  int quarter_turns = 0;  // counter-clockwise, out[i][j] = in[H-1-j][i] per turn
  bool hflip = false, vflip = false;
  // photometric
  bool jitter = false;
  double brightness = 1.0, contrast = 1.0, saturation = 1.0;
  bool grayscale = false;
  bool blur = false;
  double blur_sigma = 0.0;
  // batch level
  std::optional<CutBox> cutmix_box;
  std::optional<std::size_t> cutmix_partner;

  nlohmann::json to_json() const;
  bool operator==(const AugRecord&) const = default;
};

struct WeakParams {
  double min_scale = 0.5, max_scale = 2.0;
};

struct StrongParams {
  double p_jitter = 0.8;
  double jitter_range = 0.5;  // factors in [1 - r, 1 + r]
  double p_grayscale = 0.2;
  double p_blur = 0.5;
  double min_sigma = 0.1, max_sigma = 2.0;

  bool operator==(const StrongParams&) const = default;
};

struct CutMixParams {
  double p = 0.5;
  double min_area = 0.1, max_area = 0.5;
  double min_aspect = 0.5, max_aspect = 2.0;

  bool operator==(const CutMixParams&) const = default;
};

AugRecord sample_weak(std::size_t size, RngStream& rng, const WeakParams& params = {});

/// Applies the geometric part of a record. Padding is 0 for images and `fill`
/// for label maps.
Tensor apply_geometry(const Tensor& image, const AugRecord& rec);
LabelMap apply_geometry(const LabelMap& mask, const AugRecord& rec, std::uint16_t fill);

struct WeakView {
  Tensor image;
  std::optional<LabelMap> mask;  // padding carries kIgnoreLabel
  std::vector<std::uint8_t> valid;  // 0 on padding pixels
  AugRecord record;
};

WeakView weak_augment(const Tensor& image, const LabelMap* mask, RngStream& rng,
                      const WeakParams& params = {});

AugRecord sample_strong(RngStream& rng, const StrongParams& params = {});
/// Photometric part of a record; output clamped to [0, 1].
Tensor apply_photometric(const Tensor& image, const AugRecord& rec);
/// Samples photometric fields into `rec` (normally the weak record) and
/// applies them.
Tensor strong_augment(const Tensor& view, RngStream& rng, AugRecord& rec,
                      const StrongParams& params = {});

Tensor to_grayscale(const Tensor& image);
Tensor gaussian_blur(const Tensor& image, double sigma);

struct MixItem {
  Tensor image;                      // [H x W x 3]
  std::vector<std::uint16_t> labels;  // H*W
  std::vector<double> confidence;    // H*W
};

/// Returns one record per item (box and partner set when mixed). Batches of
/// fewer than two items are left alone.
std::vector<AugRecord> cutmix_batch(std::vector<MixItem>& batch, RngStream& rng,
                                    const CutMixParams& params = {});

}  // namespace s5
