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

#include "s5/io/run_config.hpp"

#include <fstream>
#include <set>

#include "s5/util/error.hpp"

namespace s5 {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string section) : obj_(obj), section_(std::move(section)) {
    if (!obj_.is_object()) throw ConfigError(where() + "expected an object");
  }

  template <class T>
  void operator()(const char* key, T& dst) {
    known_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      dst = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where() + key + ": " + e.what());
    }
  }

  void operator()(const char* key, ScheduleMode& dst) {
    std::string text = dst == ScheduleMode::RoundRobin ? "round_robin" : "proportional";
    (*this)(key, text);
    if (text == "round_robin") {
      dst = ScheduleMode::RoundRobin;
    } else if (text == "proportional") {
      dst = ScheduleMode::Proportional;
    } else {
      throw ConfigError(where() + key + ": expected round_robin or proportional");
    }
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!known_.contains(key)) throw ConfigError(where() + "unknown key '" + key + "'");
    }
  }

 private:
  std::string where() const { return section_.empty() ? "config: " : "config." + section_ + ": "; }

  const json& obj_;
  std::string section_;
  std::set<std::string> known_;
};

class Writer {
 public:
  template <class T>
  void operator()(const char* key, const T& v) {
    out[key] = v;
  }
  void operator()(const char* key, const ScheduleMode& v) {
    out[key] = v == ScheduleMode::RoundRobin ? "round_robin" : "proportional";
  }
  json out = json::object();
};

template <class V, class C>
void model_fields(V& v, C& c) {
  v("image_size", c.image_size);
  v("patch_size", c.patch_size);
  v("embed_dim", c.embed_dim);
  v("ffn_hidden", c.ffn_hidden);
  v("depth", c.depth);
  v("heads", c.heads);
  v("num_classes", c.num_classes);
  v("num_datasets", c.num_datasets);
  v("alpha", c.alpha);
  v("moe_enabled", c.moe_enabled);
  v("dataset_classes", c.dataset_classes);
}

template <class V, class C>
void train_fields(V& v, C& c) {
  v("tau", c.tau);
  v("lambda", c.lambda);
  v("batch_labeled", c.batch_labeled);
  v("batch_unlabeled", c.batch_unlabeled);
  v("lr", c.lr);
  v("warmup_steps", c.warmup_steps);
  v("weight_decay", c.weight_decay);
  v("beta1", c.beta1);
  v("beta2", c.beta2);
  v("adam_eps", c.adam_eps);
  v("steps", c.steps);
  v("eval_every", c.eval_every);
  v("supervised_only", c.supervised_only);
  v("p_jitter", c.strong.p_jitter);
  v("jitter_range", c.strong.jitter_range);
  v("p_grayscale", c.strong.p_grayscale);
  v("p_blur", c.strong.p_blur);
  v("p_cutmix", c.cutmix.p);
}

template <class V, class C>
void curation_fields(V& v, C& c) {
  v("clusters", c.clusters);
  v("budget", c.budget);
  v("background_class", c.background_class);
  v("max_iterations", c.max_iterations);
  v("tolerance", c.tolerance);
}

template <class V, class C>
void synth_fields(V& v, C& c) {
  v("labeled", c.labeled);
  v("unlabeled_clean", c.unlabeled_clean);
  v("unlabeled_ood", c.unlabeled_ood);
  v("val", c.val);
  v("styles", c.styles);
  v("mdf_train", c.mdf_train);
  v("mdf_val", c.mdf_val);
  v("image_size", c.scene.image_size);
  v("num_classes", c.scene.num_classes);
  v("min_objects", c.scene.min_objects);
  v("max_objects", c.scene.max_objects);
  v("noise", c.scene.noise);
  v("color_jitter", c.scene.color_jitter);
  v("illumination", c.scene.illumination);
}

template <class V, class C>
void finetune_fields(V& v, C& c) {
  v("steps", c.steps);
  v("batch", c.batch);
  v("lr", c.lr);
  v("weight_decay", c.weight_decay);
  v("schedule", c.schedule);
}

template <class C, class F>
json write_section(const C& c, F fields) {
  Writer w;
  fields(w, c);
  return w.out;
}

template <class C, class F>
void read_section(const json& j, const char* name, C& c, F fields) {
  if (!j.contains(name)) return;
  Reader r(j.at(name), name);
  fields(r, c);
  r.finish();
}

}  // namespace

json to_json(const ModelConfig& c) {
  return write_section(c, [](auto& v, auto& x) { model_fields(v, x); });
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  Reader r(j, "model");
  model_fields(r, c);
  r.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["model"] = to_json(c.model);
  j["train"] = write_section(c.train, [](auto& v, auto& x) { train_fields(v, x); });
  j["curation"] = write_section(c.curation, [](auto& v, auto& x) { curation_fields(v, x); });
  j["synth"] = write_section(c.synth, [](auto& v, auto& x) { synth_fields(v, x); });
  j["finetune"] = write_section(c.finetune, [](auto& v, auto& x) { finetune_fields(v, x); });
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "seed" && key != "model" && key != "train" && key != "curation" &&
        key != "synth" && key != "finetune") {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (j.contains("seed")) {
    try {
      c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: seed: ") + e.what());
    }
  }
  read_section(j, "model", c.model, [](auto& v, auto& x) { model_fields(v, x); });
  read_section(j, "train", c.train, [](auto& v, auto& x) { train_fields(v, x); });
  read_section(j, "curation", c.curation, [](auto& v, auto& x) { curation_fields(v, x); });
  read_section(j, "synth", c.synth, [](auto& v, auto& x) { synth_fields(v, x); });
  read_section(j, "finetune", c.finetune, [](auto& v, auto& x) { finetune_fields(v, x); });
  c.model.validate();
  c.train.validate();
  c.curation.validate();
  c.synth.validate();
  c.finetune.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace s5
