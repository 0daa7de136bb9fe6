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

#include "s5/train/data.hpp"

#include "s5/io/tensor_file.hpp"
#include "s5/util/error.hpp"
#include "s5/util/parallel.hpp"
#include "s5/util/rng.hpp"

namespace s5 {

std::vector<Sample> load_samples(const Manifest& manifest, bool require_masks,
                                 std::size_t workers) {
  std::vector<Sample> out(manifest.size());
  parallel_for(manifest.size(), workers, [&](std::size_t i) {
    const ManifestRecord& r = manifest.records[i];
    Sample& s = out[i];
    s.id = r.id;
    s.dataset = r.dataset;
    s.image = read_tensor_file(manifest.image_path(r));
    if (s.image.rank() != 3 || s.image.dim(2) != 3) {
      throw DimensionError("patch " + r.id + ": image has shape " + shape_str(s.image.shape()));
    }
    if (r.mask) {
      s.mask = read_label_file(manifest.mask_path(r));
      if (s.mask->height != s.image.dim(0) || s.mask->width != s.image.dim(1)) {
        throw DimensionError("patch " + r.id + ": mask does not match image");
      }
    } else if (require_masks) {
      throw ValidationError("patch " + r.id + " has no mask");
    }
  });
  return out;
}

std::vector<LabeledImage> labeled_view(const std::vector<Sample>& samples) {
  std::vector<LabeledImage> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    if (!s.mask) throw ValidationError("patch " + s.id + " has no mask");
    out.push_back({&s.image, &*s.mask});
  }
  return out;
}

std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch, std::size_t step,
                                       std::uint64_t seed, std::string_view stream) {
  if (n == 0) throw ConfigError("cannot draw a batch from an empty set");
  std::vector<std::size_t> out;
  out.reserve(batch);
  std::size_t cached_epoch = SIZE_MAX;
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t pos = step * batch + k;
    const std::size_t epoch = pos / n;
    if (epoch != cached_epoch) {
      order = RngStream::for_item(seed, stream, epoch, 7).permutation(n);
      cached_epoch = epoch;
    }
    out.push_back(order[pos % n]);
  }
  return out;
}

}  // namespace s5
