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

#include "s5/synth/corpus.hpp"

#include <cstdio>
#include <string>

#include "s5/finetune/dataset_spec.hpp"
#include "s5/io/manifest.hpp"
#include "s5/io/tensor_file.hpp"
#include "s5/synth/scene.hpp"
#include "s5/util/error.hpp"
#include "s5/util/parallel.hpp"

namespace s5 {
namespace {

struct Item {
  std::string id;
  std::string dataset;
  std::string split;
  std::size_t style = 0;
  bool ood = false;
  bool with_mask = true;
};

std::string numbered(const std::string& prefix, std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%05zu", n);
  return prefix + buf;
}

std::vector<ManifestRecord> render_items(const std::vector<Item>& items, const CorpusConfig& config,
                                         std::uint64_t seed, const std::filesystem::path& outdir,
                                         std::size_t workers) {
  std::vector<ManifestRecord> records(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const Item& it = items[i];
    SceneSpec spec = config.scene;
    spec.style = it.style;
    spec.ood = it.ood;
    RngStream rng = RngStream::for_item(seed, it.id, 0, 0);
    const Scene scene = gen_scene(spec, rng);
    ManifestRecord r;
    r.id = it.id;
    r.image = "data/" + it.id + ".img.s5tn";
    write_tensor_file(outdir / r.image, scene.image, DType::F32);
    if (it.with_mask) {
      r.mask = "data/" + it.id + ".mask.s5tn";
      write_label_file(outdir / *r.mask, scene.mask);
    }
    r.dataset = it.dataset;
    r.split = it.split;
    records[i] = std::move(r);
  });
  return records;
}

}  // namespace

CorpusManifests gen_corpus(const CorpusConfig& config, std::uint64_t seed,
                           const std::filesystem::path& outdir, std::size_t workers) {
  config.validate();
  if (!std::filesystem::is_directory(outdir)) {
    throw IoError("output directory " + outdir.string() + " does not exist");
  }
  std::error_code ec;
  std::filesystem::create_directories(outdir / "data", ec);
  if (ec) throw IoError("cannot create " + (outdir / "data").string() + ": " + ec.message());

  auto style_name = [](std::size_t s) { return "style" + std::to_string(s); };
  auto split_items = [&](const std::string& prefix, std::size_t count, const std::string& split,
                         bool mask) {
    std::vector<Item> items;
    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t style = n % config.styles;
      items.push_back({numbered(prefix, n), style_name(style), split, style, false, mask});
    }
    return items;
  };

  CorpusManifests out;
  out.labeled = outdir / "labeled.jsonl";
  out.unlabeled = outdir / "unlabeled.jsonl";
  out.val = outdir / "val.jsonl";

  const auto labeled = render_items(split_items("lab-", config.labeled, "train", true), config,
                                    seed, outdir, workers);
  write_manifest(out.labeled, labeled, outdir);

  auto unl = split_items("unl-", config.unlabeled_clean, "unlabeled", false);
  for (std::size_t n = 0; n < config.unlabeled_ood; ++n) {
    unl.push_back({numbered("ood-", n), "ood", "unlabeled", 0, true, false});
  }
  write_manifest(out.unlabeled, render_items(unl, config, seed, outdir, workers), outdir);

  write_manifest(out.val, render_items(split_items("val-", config.val, "val", true), config, seed,
                                       outdir, workers),
                 outdir);

  if (config.mdf_train > 0) {
    std::filesystem::create_directories(outdir / "mdf", ec);
    if (ec) throw IoError("cannot create " + (outdir / "mdf").string() + ": " + ec.message());
    MultiDatasetSpec spec;
    for (std::size_t s = 0; s < config.styles; ++s) {
      const std::string name = style_name(s);
      std::vector<Item> train, val;
      for (std::size_t n = 0; n < config.mdf_train; ++n) {
        train.push_back({numbered(name + "-train-", n), name, "train", s, false, true});
      }
      for (std::size_t n = 0; n < config.mdf_val; ++n) {
        val.push_back({numbered(name + "-val-", n), name, "val", s, false, true});
      }
      const auto train_path = outdir / "mdf" / (name + "_train.jsonl");
      const auto val_path = outdir / "mdf" / (name + "_val.jsonl");
      write_manifest(train_path, render_items(train, config, seed, outdir, workers), outdir);
      write_manifest(val_path, render_items(val, config, seed, outdir, workers), outdir);
      out.style_train.push_back(train_path);
      out.style_val.push_back(val_path);
      spec.datasets.push_back({name, train_path, val_path, config.scene.num_classes, kIgnoreLabel});
    }
    out.dataset_spec = outdir / "multi.json";
    write_dataset_spec(*out.dataset_spec, spec);
  }
  return out;
}

}  // namespace s5
