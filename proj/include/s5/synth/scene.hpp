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

#include <array>
#include <cstdint>
#include <vector>

#include "s5/synth/synth_config.hpp"
#include "s5/tensor/label_map.hpp"
#include "s5/tensor/tensor.hpp"
#include "s5/util/rng.hpp"

namespace s5 {

// Label classes 1..4 in order; Ring and Cross only appear in alien scenes and
// never carry a label.
enum class ShapeKind { Disk, Rectangle, Triangle, Stripe, Ring, Cross };

inline constexpr std::size_t kMaxSceneClasses = 5;  // background + 4 shapes

/// One shape in pixel coordinates; pixel (i, j) has its centre at
/// (x, y) = (j + 0.5, i + 0.5).
struct SceneObject {
  ShapeKind kind = ShapeKind::Disk;
  std::uint16_t label = 0;  // 0 for unlabeled alien shapes
  double cx = 0, cy = 0;
  double a = 0, b = 0;  // radius / half extents / outer-inner radius
  double angle = 0;     // stripes and crosses
  std::array<double, 6> tri{};  // triangle vertices x0 y0 x1 y1 x2 y2
  std::array<double, 3> color{};

  bool contains(double x, double y) const;
};

struct Scene {
  Tensor image;   // [H x W x 3] in [0, 1]
  LabelMap mask;  // topmost labeled shape at each pixel centre, else 0
  std::vector<SceneObject> objects;  // back to front
};

inline constexpr std::size_t kMaxStyles = 16;

/// Base background colour; any two styles differ by more than 0.15.
std::array<double, 3> style_background(std::size_t style);

/// Draws the objects for one scene.
std::vector<SceneObject> sample_objects(const SceneSpec& spec, RngStream& rng);

/// Renders objects over the style's textured background: 4x4 supersampled
/// coverage for the image, pixel-centre membership for the mask, then
/// Gaussian pixel noise and clamping.
Scene render_scene(const SceneSpec& spec, std::vector<SceneObject> objects, RngStream& rng);

Scene gen_scene(const SceneSpec& spec, RngStream& rng);

}  // namespace s5
