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

#include "s5/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "s5/util/error.hpp"

namespace s5 {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSuper = 4;
constexpr std::size_t kAlienCell = 4;  // pixels per side of an alien mosaic cell

// Mean colour per labeled shape class (disk, rectangle, triangle, stripe).
constexpr std::array<std::array<double, 3>, 4> kClassColor = {{
    {0.80, 0.30, 0.25},
    {0.30, 0.70, 0.35},
    {0.30, 0.40, 0.80},
    {0.85, 0.80, 0.30},
}};

constexpr std::array<std::array<double, 3>, 4> kStyleBackground = {{
    {0.45, 0.42, 0.38},
    {0.20, 0.38, 0.22},
    {0.62, 0.62, 0.68},
    {0.35, 0.25, 0.45},
}};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// Coarse lattice of per-style noise, bilinearly interpolated.
struct Texture {
  std::size_t cells = 0;
  std::vector<double> lattice;
  double amplitude = 0;

  double at(double u, double v) const {
    const double gx = u * static_cast<double>(cells), gy = v * static_cast<double>(cells);
    const std::size_t x0 = std::min(static_cast<std::size_t>(gx), cells - 1);
    const std::size_t y0 = std::min(static_cast<std::size_t>(gy), cells - 1);
    const double fx = gx - static_cast<double>(x0), fy = gy - static_cast<double>(y0);
    const std::size_t n = cells + 1;
    auto L = [&](std::size_t y, std::size_t x) { return lattice[y * n + x]; };
    const double top = L(y0, x0) * (1 - fx) + L(y0, x0 + 1) * fx;
    const double bot = L(y0 + 1, x0) * (1 - fx) + L(y0 + 1, x0 + 1) * fx;
    return amplitude * (top * (1 - fy) + bot * fy);
  }
};

}  // namespace

void SceneSpec::validate() const {
  if (image_size == 0) throw ConfigError("synth.image_size must be positive");
  if (num_classes < 2 || num_classes > kMaxSceneClasses) {
    throw ConfigError("synth.num_classes must lie in [2, " + std::to_string(kMaxSceneClasses) +
                      "], got " + std::to_string(num_classes));
  }
  if (min_objects > max_objects) throw ConfigError("synth.min_objects exceeds synth.max_objects");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synth.noise must be >= 0");
  if (!(color_jitter >= 0.0 && color_jitter <= 1.0)) {
    throw ConfigError("synth.color_jitter must lie in [0, 1]");
  }
  if (!(illumination >= 0.0 && illumination < 1.0)) {
    throw ConfigError("synth.illumination must lie in [0, 1)");
  }
}

void CorpusConfig::validate() const {
  scene.validate();
  if (styles == 0 || styles > kMaxStyles) {
    throw ConfigError("synth.styles must be in [1, " + std::to_string(kMaxStyles) + "]");
  }
}

bool SceneObject::contains(double x, double y) const {
  const double dx = x - cx, dy = y - cy;
  switch (kind) {
    case ShapeKind::Disk:
      return dx * dx + dy * dy <= a * a;
    case ShapeKind::Rectangle:
      return std::abs(dx) <= a && std::abs(dy) <= b;
    case ShapeKind::Triangle: {
      const double d0 = cross2(tri[2] - tri[0], tri[3] - tri[1], x - tri[0], y - tri[1]);
      const double d1 = cross2(tri[4] - tri[2], tri[5] - tri[3], x - tri[2], y - tri[3]);
      const double d2 = cross2(tri[0] - tri[4], tri[1] - tri[5], x - tri[4], y - tri[5]);
      const bool neg = d0 < 0 || d1 < 0 || d2 < 0;
      const bool pos = d0 > 0 || d1 > 0 || d2 > 0;
      return !(neg && pos);
    }
    case ShapeKind::Stripe: {
      const double c = std::cos(angle), s = std::sin(angle);
      const double along = dx * c + dy * s, across = -dx * s + dy * c;
      return std::abs(along) <= a && std::abs(across) <= b;
    }
    case ShapeKind::Ring: {
      const double r2 = dx * dx + dy * dy;
      return r2 <= a * a && r2 >= b * b;
    }
    case ShapeKind::Cross: {
      const double c = std::cos(angle), s = std::sin(angle);
      const double u = std::abs(dx * c + dy * s), v = std::abs(-dx * s + dy * c);
      return (u <= a && v <= b) || (v <= a && u <= b);
    }
  }
  return false;
}

constexpr double kStyleGap = 0.15;

std::array<double, 3> style_background(std::size_t style) {
  if (style < kStyleBackground.size()) return kStyleBackground[style];
  if (style >= kMaxStyles) throw ConfigError("style " + std::to_string(style) + " out of range");
  // Later styles are drawn one after another, each redrawn until it sits at
  // least kStyleGap from every earlier one.
  std::vector<std::array<double, 3>> taken(kStyleBackground.begin(), kStyleBackground.end());
  RngStream rng(0x5354594cULL, 0);
  while (taken.size() <= style) {
    const std::array<double, 3> c{rng.uniform(0.15, 0.75), rng.uniform(0.15, 0.75),
                                  rng.uniform(0.15, 0.75)};
    bool far = true;
    for (const auto& t : taken) {
      double d = 0;
      for (int k = 0; k < 3; ++k) d += (c[k] - t[k]) * (c[k] - t[k]);
      far = far && std::sqrt(d) >= kStyleGap;
    }
    if (far) taken.push_back(c);
  }
  return taken[style];
}

std::vector<SceneObject> sample_objects(const SceneSpec& spec, RngStream& rng) {
  const double S = static_cast<double>(spec.image_size);
  const std::size_t count =
      spec.min_objects + rng.below(spec.max_objects - spec.min_objects + 1);
  std::vector<SceneObject> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    SceneObject o;
    o.cx = rng.uniform(0.1, 0.9) * S;
    o.cy = rng.uniform(0.1, 0.9) * S;
    if (spec.ood) {
      o.kind = rng.bernoulli(0.5) ? ShapeKind::Ring : ShapeKind::Cross;
      o.label = 0;
      if (o.kind == ShapeKind::Ring) {
        o.a = rng.uniform(0.10, 0.22) * S;
        o.b = o.a * rng.uniform(0.4, 0.7);
      } else {
        o.a = rng.uniform(0.12, 0.25) * S;
        o.b = rng.uniform(0.02, 0.05) * S;
        o.angle = rng.uniform(0.0, kPi);
      }
      for (double& c : o.color) c = rng.uniform();
      out.push_back(o);
      continue;
    }
    const std::size_t cls = 1 + rng.below(spec.num_classes - 1);
    o.label = static_cast<std::uint16_t>(cls);
    o.kind = static_cast<ShapeKind>(cls - 1);
    switch (o.kind) {
      case ShapeKind::Disk:
        o.a = rng.uniform(0.08, 0.18) * S;
        break;
      case ShapeKind::Rectangle:
        o.a = rng.uniform(0.08, 0.20) * S;
        o.b = rng.uniform(0.08, 0.20) * S;
        break;
      case ShapeKind::Triangle: {
        const double r = rng.uniform(0.12, 0.22) * S;
        const double base = rng.uniform(0.0, 2 * kPi);
        for (int v = 0; v < 3; ++v) {
          const double t = base + v * 2 * kPi / 3 + rng.uniform(-0.3, 0.3);
          o.tri[2 * v] = o.cx + r * std::cos(t);
          o.tri[2 * v + 1] = o.cy + r * std::sin(t);
        }
        break;
      }
      case ShapeKind::Stripe:
        o.a = rng.uniform(0.25, 0.45) * S;
        o.b = rng.uniform(0.03, 0.06) * S;
        o.angle = rng.uniform(0.0, kPi);
        break;
      default:
        break;
    }
    for (int c = 0; c < 3; ++c) {
      o.color[c] = clamp01(kClassColor[cls - 1][c] + rng.uniform(-spec.color_jitter, spec.color_jitter));
    }
    out.push_back(o);
  }
  return out;
}

Scene render_scene(const SceneSpec& spec, std::vector<SceneObject> objects, RngStream& rng) {
  spec.validate();
  const std::size_t S = spec.image_size;
  Scene scene{Tensor({S, S, 3}), LabelMap(S, S, 0), std::move(objects)};

  // Background: style colour and a per-scene texture. Alien scenes get a
  // mosaic of random colour cells instead.
  Texture tex;
  tex.cells = 4;
  tex.amplitude = spec.ood ? 0.0 : 0.08;
  tex.lattice.resize((tex.cells + 1) * (tex.cells + 1));
  for (double& v : tex.lattice) v = rng.uniform(-1.0, 1.0);
  // Scene-wide lighting: one gain and a per-channel cast.
  std::array<double, 3> light{1.0, 1.0, 1.0};
  if (spec.illumination > 0) {
    const double gain = rng.uniform(1.0 - spec.illumination, 1.0 + spec.illumination);
    for (double& l : light) l = gain * rng.uniform(1.0 - spec.illumination / 2, 1.0 + spec.illumination / 2);
  }
  const auto base = style_background(spec.style);
  const std::size_t cells = (S + kAlienCell - 1) / kAlienCell;
  std::vector<double> mosaic;
  if (spec.ood) {
    mosaic.resize(cells * cells * 3);
    for (double& v : mosaic) v = rng.uniform();
  }
  std::vector<double> bg(S * S * 3);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j) {
      const double t = tex.at((j + 0.5) / S, (i + 0.5) / S);
      const std::size_t cell = (i / kAlienCell) * cells + j / kAlienCell;
      for (std::size_t c = 0; c < 3; ++c) {
        bg[(i * S + j) * 3 + c] = spec.ood ? mosaic[cell * 3 + c] : clamp01(base[c] + t);
      }
    }

  const double step = 1.0 / kSuper;
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j) {
      std::array<double, 3> acc{0, 0, 0};
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const double x = j + (sx + 0.5) * step, y = i + (sy + 0.5) * step;
          const SceneObject* top = nullptr;
          for (const SceneObject& o : scene.objects)
            if (o.contains(x, y)) top = &o;
          for (std::size_t c = 0; c < 3; ++c) acc[c] += top ? top->color[c] : bg[(i * S + j) * 3 + c];
        }
      std::uint16_t label = 0;
      for (const SceneObject& o : scene.objects)
        if (o.contains(j + 0.5, i + 0.5)) label = o.label;
      scene.mask.at(i, j) = label;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = acc[c] / (kSuper * kSuper) * light[c] + spec.noise * rng.normal();
        scene.image.at(i, j, c) = clamp01(v);
      }
    }
  return scene;
}

Scene gen_scene(const SceneSpec& spec, RngStream& rng) {
  spec.validate();
  auto objects = sample_objects(spec, rng);
  return render_scene(spec, std::move(objects), rng);
}

}  // namespace s5
