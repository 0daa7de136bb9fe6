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

#include "s5/augment/augment.hpp"

#include <algorithm>
#include <cmath>

#include "s5/util/error.hpp"

namespace s5 {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::size_t image_side(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != image.dim(1) || image.dim(2) != 3) {
    throw DimensionError("augment: expected square [HxWx3] image, got " + shape_str(image.shape()));
  }
  return image.dim(0);
}

// Generic right-angle rotation / flips over a square grid of `ch` channels.
template <class T>
std::vector<T> orient(std::vector<T> grid, std::size_t S, std::size_t ch, const AugRecord& rec) {
  std::vector<T> tmp(grid.size());
  for (int turn = 0; turn < ((rec.quarter_turns % 4) + 4) % 4; ++turn) {
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = 0; j < S; ++j)
        for (std::size_t c = 0; c < ch; ++c)
          tmp[(i * S + j) * ch + c] = grid[((S - 1 - j) * S + i) * ch + c];
    grid.swap(tmp);
  }
  if (rec.hflip) {
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = 0; j < S; ++j)
        for (std::size_t c = 0; c < ch; ++c)
          tmp[(i * S + j) * ch + c] = grid[(i * S + (S - 1 - j)) * ch + c];
    grid.swap(tmp);
  }
  if (rec.vflip) {
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = 0; j < S; ++j)
        for (std::size_t c = 0; c < ch; ++c)
          tmp[(i * S + j) * ch + c] = grid[((S - 1 - i) * S + j) * ch + c];
    grid.swap(tmp);
  }
  return grid;
}

template <class T>
std::vector<T> crop(const std::vector<T>& scaled, std::size_t Ss, std::size_t S, std::size_t ch,
                    const AugRecord& rec, T fill) {
  std::vector<T> out(S * S * ch, fill);
  for (std::size_t i = 0; i < S; ++i) {
    const long y = static_cast<long>(i) + rec.crop_y;
    if (y < 0 || y >= static_cast<long>(Ss)) continue;
    for (std::size_t j = 0; j < S; ++j) {
      const long x = static_cast<long>(j) + rec.crop_x;
      if (x < 0 || x >= static_cast<long>(Ss)) continue;
      for (std::size_t c = 0; c < ch; ++c) {
        out[(i * S + j) * ch + c] = scaled[(static_cast<std::size_t>(y) * Ss + x) * ch + c];
      }
    }
  }
  return out;
}

std::size_t scaled_of(const AugRecord& rec, std::size_t S) {
  return rec.scaled_size == 0 ? S : rec.scaled_size;
}

}  // namespace

nlohmann::json AugRecord::to_json() const {
  nlohmann::json j{{"scale", scale},
                   {"scaled_size", scaled_size},
                   {"crop", {crop_y, crop_x}},
                   {"rotation", 90 * quarter_turns},
                   {"hflip", hflip},
                   {"vflip", vflip},
                   {"jitter", jitter},
                   {"brightness", brightness},
                   {"contrast", contrast},
                   {"saturation", saturation},
                   {"grayscale", grayscale},
                   {"blur", blur},
                   {"blur_sigma", blur_sigma}};
  if (cutmix_box) {
    j["cutmix_box"] = {cutmix_box->y, cutmix_box->x, cutmix_box->height, cutmix_box->width};
  } else {
    j["cutmix_box"] = nullptr;
  }
  j["cutmix_partner"] = cutmix_partner ? nlohmann::json(*cutmix_partner) : nlohmann::json(nullptr);
  return j;
}

AugRecord sample_weak(std::size_t size, RngStream& rng, const WeakParams& params) {
  AugRecord rec;
  rec.scale = rng.uniform(params.min_scale, params.max_scale);
  rec.scaled_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(rec.scale * static_cast<double>(size))));
  const long slack = static_cast<long>(rec.scaled_size) - static_cast<long>(size);
  if (slack >= 0) {
    rec.crop_y = static_cast<long>(rng.below(slack + 1));
    rec.crop_x = static_cast<long>(rng.below(slack + 1));
  } else {
    rec.crop_y = -static_cast<long>(rng.below(-slack + 1));
    rec.crop_x = -static_cast<long>(rng.below(-slack + 1));
  }
  rec.quarter_turns = static_cast<int>(rng.below(4));
  rec.hflip = rng.bernoulli(0.5);
  rec.vflip = rng.bernoulli(0.5);
  return rec;
}

Tensor apply_geometry(const Tensor& image, const AugRecord& rec) {
  const std::size_t S = image_side(image), Ss = scaled_of(rec, S);
  std::vector<double> scaled(Ss * Ss * 3);
  if (Ss == S) {
    std::copy(image.values().begin(), image.values().end(), scaled.begin());
  } else {
    // Bilinear, pixel centres aligned.
    const double ratio = static_cast<double>(S) / static_cast<double>(Ss);
    for (std::size_t i = 0; i < Ss; ++i) {
      const double sy = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(S - 1));
      const std::size_t y0 = static_cast<std::size_t>(sy), y1 = std::min(y0 + 1, S - 1);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t j = 0; j < Ss; ++j) {
        const double sx = std::clamp((j + 0.5) * ratio - 0.5, 0.0, static_cast<double>(S - 1));
        const std::size_t x0 = static_cast<std::size_t>(sx), x1 = std::min(x0 + 1, S - 1);
        const double fx = sx - static_cast<double>(x0);
        for (std::size_t c = 0; c < 3; ++c) {
          const double top = image.at(y0, x0, c) * (1 - fx) + image.at(y0, x1, c) * fx;
          const double bot = image.at(y1, x0, c) * (1 - fx) + image.at(y1, x1, c) * fx;
          scaled[(i * Ss + j) * 3 + c] = top * (1 - fy) + bot * fy;
        }
      }
    }
  }
  auto out = orient(crop(scaled, Ss, S, 3, rec, 0.0), S, 3, rec);
  return Tensor({S, S, 3}, std::move(out));
}

LabelMap apply_geometry(const LabelMap& mask, const AugRecord& rec, std::uint16_t fill) {
  if (mask.height != mask.width) throw DimensionError("augment: mask must be square");
  const std::size_t S = mask.height, Ss = scaled_of(rec, S);
  std::vector<std::uint16_t> scaled(Ss * Ss);
  for (std::size_t i = 0; i < Ss; ++i) {
    const std::size_t sy = std::min(S - 1, (2 * i + 1) * S / (2 * Ss));
    for (std::size_t j = 0; j < Ss; ++j) {
      const std::size_t sx = std::min(S - 1, (2 * j + 1) * S / (2 * Ss));
      scaled[i * Ss + j] = mask.at(sy, sx);
    }
  }
  LabelMap out(S, S);
  out.labels = orient(crop(scaled, Ss, S, 1, rec, fill), S, 1, rec);
  return out;
}

WeakView weak_augment(const Tensor& image, const LabelMap* mask, RngStream& rng,
                      const WeakParams& params) {
  const std::size_t S = image_side(image);
  WeakView v;
  v.record = sample_weak(S, rng, params);
  v.image = apply_geometry(image, v.record);
  if (mask != nullptr) {
    if (mask->height != S || mask->width != S) {
      throw DimensionError("augment: mask does not match image size");
    }
    v.mask = apply_geometry(*mask, v.record, kIgnoreLabel);
  }
  LabelMap ones(S, S, 1);
  const LabelMap valid = apply_geometry(ones, v.record, 0);
  v.valid.assign(valid.labels.begin(), valid.labels.end());
  return v;
}

AugRecord sample_strong(RngStream& rng, const StrongParams& params) {
  AugRecord rec;
  rec.jitter = rng.bernoulli(params.p_jitter);
  const double lo = 1.0 - params.jitter_range, hi = 1.0 + params.jitter_range;
  const double b = rng.uniform(lo, hi), c = rng.uniform(lo, hi), s = rng.uniform(lo, hi);
  if (rec.jitter) {
    rec.brightness = b;
    rec.contrast = c;
    rec.saturation = s;
  }
  rec.grayscale = rng.bernoulli(params.p_grayscale);
  rec.blur = rng.bernoulli(params.p_blur);
  const double sigma = rng.uniform(params.min_sigma, params.max_sigma);
  if (rec.blur) rec.blur_sigma = sigma;
  return rec;
}

Tensor to_grayscale(const Tensor& image) {
  const std::size_t S = image_side(image);
  Tensor out({S, S, 3});
  for (std::size_t i = 0; i < S * S; ++i) {
    const double g = 0.299 * image[3 * i] + 0.587 * image[3 * i + 1] + 0.114 * image[3 * i + 2];
    out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = g;
  }
  return out;
}

Tensor gaussian_blur(const Tensor& image, double sigma) {
  const std::size_t S = image_side(image);
  if (!(sigma > 0)) throw ValidationError("gaussian_blur: sigma must be positive");
  const long radius = std::max(1L, static_cast<long>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (long t = -radius; t <= radius; ++t) {
    k[t + radius] = std::exp(-static_cast<double>(t * t) / (2 * sigma * sigma));
    total += k[t + radius];
  }
  for (double& w : k) w /= total;
  auto clampi = [&](long v) {
    return static_cast<std::size_t>(std::clamp(v, 0L, static_cast<long>(S) - 1));
  };
  Tensor tmp({S, S, 3}), out({S, S, 3});
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0;
        for (long t = -radius; t <= radius; ++t) {
          acc += k[t + radius] * image.at(i, clampi(static_cast<long>(j) + t), c);
        }
        tmp.at(i, j, c) = acc;
      }
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0;
        for (long t = -radius; t <= radius; ++t) {
          acc += k[t + radius] * tmp.at(clampi(static_cast<long>(i) + t), j, c);
        }
        out.at(i, j, c) = acc;
      }
  return out;
}

Tensor apply_photometric(const Tensor& image, const AugRecord& rec) {
  const std::size_t S = image_side(image), n = S * S;
  Tensor out = image.reshaped(image.shape());
  if (rec.jitter) {
    for (double& v : out.values()) v = clamp01(v * rec.brightness);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mean += 0.299 * out[3 * i] + 0.587 * out[3 * i + 1] + 0.114 * out[3 * i + 2];
    }
    mean /= static_cast<double>(n);
    for (double& v : out.values()) v = clamp01((v - mean) * rec.contrast + mean);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = 0.299 * out[3 * i] + 0.587 * out[3 * i + 1] + 0.114 * out[3 * i + 2];
      for (std::size_t c = 0; c < 3; ++c) out[3 * i + c] = clamp01((out[3 * i + c] - g) * rec.saturation + g);
    }
  }
  if (rec.grayscale) out = to_grayscale(out);
  if (rec.blur) out = gaussian_blur(out, rec.blur_sigma);
  for (double& v : out.values()) v = clamp01(v);
  return out;
}

Tensor strong_augment(const Tensor& view, RngStream& rng, AugRecord& rec,
                      const StrongParams& params) {
  const AugRecord photo = sample_strong(rng, params);
  rec.jitter = photo.jitter;
  rec.brightness = photo.brightness;
  rec.contrast = photo.contrast;
  rec.saturation = photo.saturation;
  rec.grayscale = photo.grayscale;
  rec.blur = photo.blur;
  rec.blur_sigma = photo.blur_sigma;
  return apply_photometric(view, rec);
}

std::vector<AugRecord> cutmix_batch(std::vector<MixItem>& batch, RngStream& rng,
                                    const CutMixParams& params) {
  std::vector<AugRecord> recs(batch.size());
  if (batch.size() < 2) return recs;
  const std::size_t S = image_side(batch[0].image);
  for (const MixItem& m : batch) {
    if (m.image.shape() != batch[0].image.shape() || m.labels.size() != S * S ||
        m.confidence.size() != S * S) {
      throw DimensionError("cutmix_batch: items disagree in shape");
    }
  }
  // Partner of order[k] is order[k + 1], so nobody is paired with itself.
  const std::vector<std::size_t> order = rng.permutation(batch.size());
  std::vector<std::size_t> partner(batch.size());
  for (std::size_t k = 0; k < order.size(); ++k) partner[order[k]] = order[(k + 1) % order.size()];

  const std::vector<MixItem> source = batch;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const bool apply = rng.bernoulli(params.p);
    const double area = rng.uniform(params.min_area, params.max_area);
    const double aspect = rng.uniform(params.min_aspect, params.max_aspect);
    const double side = static_cast<double>(S);
    CutBox box;
    box.height = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(side * std::sqrt(area * aspect))), 1, S);
    box.width = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(side * std::sqrt(area / aspect))), 1, S);
    box.y = rng.below(S - box.height + 1);
    box.x = rng.below(S - box.width + 1);
    if (!apply) continue;
    recs[i].cutmix_box = box;
    recs[i].cutmix_partner = partner[i];
    const MixItem& from = source[partner[i]];
    MixItem& to = batch[i];
    for (std::size_t y = box.y; y < box.y + box.height; ++y)
      for (std::size_t x = box.x; x < box.x + box.width; ++x) {
        const std::size_t p = y * S + x;
        for (std::size_t c = 0; c < 3; ++c) to.image[3 * p + c] = from.image[3 * p + c];
        to.labels[p] = from.labels[p];
        to.confidence[p] = from.confidence[p];
      }
  }
  return recs;
}

}  // namespace s5
