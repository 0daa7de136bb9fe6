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

// s5: command-line front end for corpus generation, inference, curation,
// pre-training, fine-tuning, evaluation and parameter accounting.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "s5/curation/curation.hpp"
#include "s5/finetune/dataset_spec.hpp"
#include "s5/finetune/finetune.hpp"
#include "s5/io/checkpoint.hpp"
#include "s5/io/manifest.hpp"
#include "s5/io/run_config.hpp"
#include "s5/io/tensor_file.hpp"
#include "s5/model/inference.hpp"
#include "s5/model/param_count.hpp"
#include "s5/synth/corpus.hpp"
#include "s5/train/s4.hpp"
#include "s5/util/error.hpp"
#include "s5/util/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace s5 {
namespace {

// Flags shared by every subcommand.
struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::string config;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "random seed (default: $S5_SEED, then the config)");
  cmd->add_option("--workers", c.workers, "worker threads; never changes any output byte")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--config", c.config, "run configuration JSON");
}

RunConfig load_config(const Common& c) {
  return c.config.empty() ? RunConfig{} : load_run_config(c.config);
}

// --seed, else S5_SEED, else the config file's seed.
std::uint64_t resolve_seed(const Common& c, const RunConfig& cfg) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("S5_SEED"); env != nullptr && *env != '\0') {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(env, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != std::string(env).size()) throw ConfigError("S5_SEED is not an unsigned integer: " + std::string(env));
    return v;
  }
  return cfg.seed;
}

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("output directory does not exist: " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

// ---------------------------------------------------------------- gen-synth

struct GenSynth {
  Common common;
  std::string out;
};

int run_gen_synth(const GenSynth& a) {
  const RunConfig cfg = load_config(a.common);
  const std::uint64_t seed = resolve_seed(a.common, cfg);
  require_dir(a.out);
  const CorpusManifests m = gen_corpus(cfg.synth, seed, a.out, a.common.workers);
  std::cout << "labeled " << m.labeled.string() << "\nunlabeled " << m.unlabeled.string()
            << "\nval " << m.val.string() << "\n";
  if (m.dataset_spec) std::cout << "datasets " << m.dataset_spec->string() << "\n";
  return 0;
}

// -------------------------------------------------------------------- infer

struct Infer {
  Common common;
  std::string ckpt, manifest, emit = "probs,features", out;
  std::size_t dataset = 0;
};

int run_infer(const Infer& a) {
  const RunConfig cfg = load_config(a.common);
  (void)resolve_seed(a.common, cfg);
  bool probs = false, features = false;
  std::stringstream ss(a.emit);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item == "probs") {
      probs = true;
    } else if (item == "features") {
      features = true;
    } else {
      throw ConfigError("--emit: unknown item '" + item + "' (expected probs, features)");
    }
  }
  require_dir(a.out);
  SegNet net = load_checkpoint(a.ckpt);
  if (a.dataset >= net.config().num_datasets) {
    throw ModelError("--dataset-id " + std::to_string(a.dataset) + " but the checkpoint has " +
                     std::to_string(net.config().num_datasets) + " decoder(s)");
  }
  const Manifest m = read_manifest(a.manifest);
  const std::size_t S = net.config().image_size;
  parallel_for(m.size(), a.common.workers, [&](std::size_t i) {
    const ManifestRecord& r = m.records[i];
    const Tensor image = read_tensor_file(m.image_path(r));
    if (image.shape() != Shape{S, S, 3}) {
      throw ModelError("patch " + r.id + ": image " + shape_str(image.shape()) +
                       " does not fit a network for " + std::to_string(S) + "x" +
                       std::to_string(S) + " inputs");
    }
    if (probs) {
      const Tensor p = predict_probs(net, image, a.dataset);
      write_tensor_file(prob_file(a.out, r.id), p.reshaped({S, S, p.dim(1)}), DType::F32);
    }
    if (features) {
      const auto f = pooled_features(net, image, a.dataset);
      write_tensor_file(feature_file(a.out, r.id), Tensor({f.size()}, f), DType::F64);
    }
  });
  std::cout << "wrote " << m.size() << " patch(es) to " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------- curate

struct Curate {
  Common common;
  std::string labeled, unlabeled, probs, features, out, strategy = "entropy";
  std::optional<std::size_t> budget, clusters;
};

int run_curate(const Curate& a) {
  RunConfig cfg = load_config(a.common);
  const std::uint64_t seed = resolve_seed(a.common, cfg);
  if (a.budget) cfg.curation.budget = *a.budget;
  if (a.clusters) cfg.curation.clusters = *a.clusters;
  CurationStrategy strategy;
  if (a.strategy == "entropy") {
    strategy = CurationStrategy::EntropyQuota;
  } else if (a.strategy == "random") {
    strategy = CurationStrategy::Random;
  } else {
    throw ConfigError("--strategy must be entropy or random");
  }
  require_dir(a.out);
  const Manifest lab = read_manifest(a.labeled);
  const Manifest unl = read_manifest(a.unlabeled);
  const fs::path feat = a.features.empty() ? fs::path(a.probs) : fs::path(a.features);
  const CurationResult r =
      curate(lab, unl, a.probs, feat, cfg.curation, seed, a.common.workers, strategy);
  write_manifest(fs::path(a.out) / "selected.jsonl", r.selected, unl.dir);
  write_json(fs::path(a.out) / "curation_report.json", r.report);
  std::cout << "selected " << r.selected.size() << " of " << unl.size() << "\n";
  return 0;
}

// ----------------------------------------------------------------- pretrain

struct Pretrain {
  Common common;
  std::string labeled, unlabeled, val, out, init;
  bool supervised = false;
  std::optional<std::size_t> steps;
  std::optional<double> lr, tau, lambda;
};

int run_pretrain(const Pretrain& a) {
  RunConfig cfg = load_config(a.common);
  const std::uint64_t seed = resolve_seed(a.common, cfg);
  if (a.supervised) cfg.train.supervised_only = true;
  if (a.steps) cfg.train.steps = *a.steps;
  if (a.lr) cfg.train.lr = *a.lr;
  if (a.tau) cfg.train.tau = *a.tau;
  if (a.lambda) cfg.train.lambda = *a.lambda;
  cfg.train.validate();
  if (!cfg.train.supervised_only && a.unlabeled.empty()) {
    throw ConfigError("pretrain needs --unlabeled unless --supervised is given");
  }
  require_dir(a.out);
  const auto lab = load_samples(read_manifest(a.labeled), true, a.common.workers);
  std::vector<Sample> unl, val;
  if (!cfg.train.supervised_only) unl = load_samples(read_manifest(a.unlabeled), false, a.common.workers);
  if (!a.val.empty()) val = load_samples(read_manifest(a.val), true, a.common.workers);

  SegNet init = a.init.empty() ? SegNet(cfg.model, seed) : load_checkpoint(a.init);
  if (init.config().moe_enabled || init.config().num_datasets != 1) {
    throw ModelError("pre-training needs a plain single-decoder network");
  }
  std::vector<json> rows;
  const fs::path log_path = fs::path(a.out) / "metrics.jsonl";
  PretrainResult r = pretrain(std::move(init), lab, unl, val.empty() ? nullptr : &val, cfg.train,
                              seed, a.common.workers, [&](const StepLog& l) {
                                rows.push_back(l.to_json());
                                if (l.miou_eval) {
                                  std::cout << "step " << l.step + 1 << " miou " << *l.miou_eval << "\n";
                                }
                              });
  save_checkpoint(fs::path(a.out) / "model.s5ck", r.net);
  write_text(log_path, jsonl(rows));
  json report{{"mode", cfg.train.supervised_only ? "supervised" : "s4"},
              {"steps", cfg.train.steps},
              {"seed", seed},
              {"tau", cfg.train.tau},
              {"lambda", cfg.train.lambda},
              {"labeled", lab.size()},
              {"unlabeled", unl.size()}};
  report["final_miou"] = r.final_miou ? json(*r.final_miou) : json(nullptr);
  write_json(fs::path(a.out) / "pretrain_report.json", report);
  return 0;
}

// ----------------------------------------------------------------- finetune

std::string sdf_name(std::size_t t) { return "model_" + std::to_string(t) + ".s5ck"; }

struct Finetune {
  Common common;
  std::string ckpt, spec, regime = "MoE-MDF", out;
  std::optional<double> alpha;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
};

int run_finetune(const Finetune& a) {
  RunConfig cfg = load_config(a.common);
  const std::uint64_t seed = resolve_seed(a.common, cfg);
  if (a.steps) cfg.finetune.steps = *a.steps;
  if (a.lr) cfg.finetune.lr = *a.lr;
  const Regime regime = parse_regime(a.regime);
  std::optional<double> alpha = a.alpha;
  if (regime == Regime::MoEMDF && !alpha) alpha = cfg.model.alpha;
  require_dir(a.out);
  const SegNet pre = load_checkpoint(a.ckpt);
  const auto data = load_datasets(read_dataset_spec(a.spec), a.common.workers);
  std::vector<json> rows;
  FinetuneResult r = finetune(pre, data, regime, alpha, cfg.finetune, seed, a.common.workers,
                              [&](const FinetuneStep& s, FinetuneModels&) { rows.push_back(s.to_json()); });
  json models{{"regime", regime_name(regime)}};
  models["alpha"] = alpha ? json(*alpha) : json(nullptr);
  json files = json::array();
  if (regime == Regime::SDF) {
    for (std::size_t t = 0; t < r.models.nets.size(); ++t) {
      save_checkpoint(fs::path(a.out) / sdf_name(t), r.models.nets[t]);
      files.push_back(sdf_name(t));
    }
  } else {
    save_checkpoint(fs::path(a.out) / "model.s5ck", r.models.nets[0]);
    files.push_back("model.s5ck");
  }
  models["checkpoints"] = files;
  json names = json::array();
  for (const auto& d : data) names.push_back(d.name);
  models["datasets"] = names;
  write_json(fs::path(a.out) / "models.json", models);
  write_text(fs::path(a.out) / "finetune_log.jsonl", jsonl(rows));
  write_json(fs::path(a.out) / "report.json", r.report.to_json());
  std::cout << "average miou " << r.report.average << "\n";
  return 0;
}

// --------------------------------------------------------------------- eval

struct Eval {
  Common common;
  std::string models, spec, ckpt, manifest, out;
  std::size_t dataset = 0;
};

FinetuneModels load_models(const fs::path& dir) {
  std::ifstream in(dir / "models.json");
  if (!in) throw IoError("cannot read " + (dir / "models.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed models.json: " + std::string(e.what()));
  }
  FinetuneModels m;
  try {
    m.regime = parse_regime(j.at("regime").get<std::string>());
    for (const auto& f : j.at("checkpoints")) m.nets.push_back(load_checkpoint(dir / f.get<std::string>()));
  } catch (const json::exception& e) {
    throw IoError("malformed models.json: " + std::string(e.what()));
  }
  return m;
}

int run_eval(const Eval& a) {
  const RunConfig cfg = load_config(a.common);
  (void)resolve_seed(a.common, cfg);
  json result;
  if (!a.models.empty()) {
    if (a.spec.empty()) throw ConfigError("eval --models needs --spec");
    FinetuneModels m = load_models(a.models);
    const auto data = load_datasets(read_dataset_spec(a.spec), a.common.workers);
    const std::size_t want = m.regime == Regime::SDF ? data.size() : 1;
    if (m.nets.size() != want ||
        (m.regime != Regime::SDF && m.nets[0].config().num_datasets != data.size())) {
      throw ModelError("checkpoints do not match the " + std::to_string(data.size()) + " dataset(s) listed in --spec");
    }
    result = evaluate(m, data, a.common.workers).to_json();
  } else {
    if (a.ckpt.empty() || a.manifest.empty()) {
      throw ConfigError("eval needs --models with --spec, or --ckpt with --manifest");
    }
    SegNet net = load_checkpoint(a.ckpt);
    if (a.dataset >= net.config().num_datasets) {
      throw ModelError("--dataset-id " + std::to_string(a.dataset) + " out of range");
    }
    const auto val = load_samples(read_manifest(a.manifest), true, a.common.workers);
    const auto cm = evaluate_confusion(net, labeled_view(val), a.dataset, kIgnoreLabel, a.common.workers);
    const MiouResult r = miou(cm);
    json per = json::array();
    for (std::size_t k = 0; k < r.per_class.size(); ++k) {
      per.push_back(r.present[k] ? json(r.per_class[k]) : json(nullptr));
    }
    result = {{"miou", r.mean}, {"per_class_iou", per}, {"images", val.size()}};
  }
  if (a.out.empty()) {
    std::cout << result.dump(2) << "\n";
  } else {
    write_json(a.out, result);
  }
  return 0;
}

// ------------------------------------------------------------------- params

struct Params {
  Common common;
  std::string regime = "MoE-MDF", out;
  std::size_t T = 1;
  std::optional<double> alpha;
};

int run_params(const Params& a) {
  RunConfig cfg = load_config(a.common);
  (void)resolve_seed(a.common, cfg);
  const Regime regime = parse_regime(a.regime);
  if (a.alpha) {
    if (regime != Regime::MoEMDF) throw ConfigError("--alpha only applies to MoE-MDF");
    cfg.model.alpha = *a.alpha;
  }
  if (a.T == 0) throw ConfigError("--T must be positive");
  cfg.model.validate();
  json j = to_json(param_count(cfg.model, regime, a.T));
  j["regime"] = regime_name(regime);
  j["T"] = a.T;
  if (regime == Regime::MoEMDF) j["alpha"] = cfg.model.alpha;
  if (a.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(a.out, j);
  }
  return 0;
}

// ------------------------------------------------------------------- report

struct Report {
  Common common;
  std::string log, out;
};

int run_report(const Report& a) {
  const RunConfig cfg = load_config(a.common);
  (void)resolve_seed(a.common, cfg);
  std::ifstream in(a.log);
  if (!in) throw IoError("cannot read " + a.log);
  json steps = json::array();
  json series = json::object();
  std::vector<std::string> order;
  std::size_t n = 0, line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(a.log + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.is_object() || !row.contains("step") || !row["step"].is_number_unsigned()) {
      throw IoError(a.log + ":" + std::to_string(line_no) + ": record without an integer step");
    }
    steps.push_back(row["step"]);
    for (const auto& [key, value] : row.items()) {
      if (key == "step") continue;
      if (!value.is_number() && !value.is_null()) {
        throw IoError(a.log + ":" + std::to_string(line_no) + ": " + key + " is not numeric");
      }
      if (!series.contains(key)) {
        series[key] = json::array();
        for (std::size_t k = 0; k < n; ++k) series[key].push_back(nullptr);
      }
    }
    for (auto& [key, values] : series.items()) {
      values.push_back(row.contains(key) ? row[key] : json(nullptr));
    }
    ++n;
  }
  write_json(a.out, json{{"count", n}, {"step", steps}, {"series", series}});
  return 0;
}

}  // namespace
}  // namespace s5

int main(int argc, char** argv) {
  using namespace s5;
  CLI::App app{"s5: semi-supervised segmentation pipeline"};
  app.require_subcommand(1);

  GenSynth gs;
  auto* c_gen = app.add_subcommand("gen-synth", "generate the synthetic corpus");
  add_common(c_gen, gs.common);
  c_gen->add_option("--out", gs.out, "existing output directory")->required();

  Infer inf;
  auto* c_inf = app.add_subcommand("infer", "write probability maps and pooled features");
  add_common(c_inf, inf.common);
  c_inf->add_option("--ckpt", inf.ckpt)->required();
  c_inf->add_option("--manifest", inf.manifest)->required();
  c_inf->add_option("--emit", inf.emit, "comma list of probs, features");
  c_inf->add_option("--dataset-id", inf.dataset);
  c_inf->add_option("--out", inf.out)->required();

  Curate cur;
  auto* c_cur = app.add_subcommand("curate", "select unlabeled patches");
  add_common(c_cur, cur.common);
  c_cur->add_option("--labeled", cur.labeled)->required();
  c_cur->add_option("--unlabeled", cur.unlabeled)->required();
  c_cur->add_option("--probs", cur.probs, "directory written by infer")->required();
  c_cur->add_option("--features", cur.features, "defaults to --probs");
  c_cur->add_option("--budget", cur.budget);
  c_cur->add_option("--clusters", cur.clusters);
  c_cur->add_option("--strategy", cur.strategy, "entropy or random");
  c_cur->add_option("--out", cur.out)->required();

  Pretrain pre;
  auto* c_pre = app.add_subcommand("pretrain", "semi-supervised (or supervised) pre-training");
  add_common(c_pre, pre.common);
  c_pre->add_option("--labeled", pre.labeled)->required();
  c_pre->add_option("--unlabeled", pre.unlabeled);
  c_pre->add_option("--val", pre.val);
  c_pre->add_option("--init", pre.init, "start from this checkpoint");
  c_pre->add_flag("--supervised", pre.supervised, "labeled loss only");
  c_pre->add_option("--steps", pre.steps);
  c_pre->add_option("--lr", pre.lr);
  c_pre->add_option("--tau", pre.tau);
  c_pre->add_option("--lambda", pre.lambda);
  c_pre->add_option("--out", pre.out)->required();

  Finetune ft;
  auto* c_ft = app.add_subcommand("finetune", "multi-dataset fine-tuning");
  add_common(c_ft, ft.common);
  c_ft->add_option("--ckpt", ft.ckpt)->required();
  c_ft->add_option("--spec", ft.spec, "multi-dataset spec JSON")->required();
  c_ft->add_option("--regime", ft.regime, "SDF, MDF or MoE-MDF");
  c_ft->add_option("--alpha", ft.alpha);
  c_ft->add_option("--steps", ft.steps);
  c_ft->add_option("--lr", ft.lr);
  c_ft->add_option("--out", ft.out)->required();

  Eval ev;
  auto* c_ev = app.add_subcommand("eval", "mIoU of fine-tuned models or a single checkpoint");
  add_common(c_ev, ev.common);
  c_ev->add_option("--models", ev.models, "directory written by finetune");
  c_ev->add_option("--spec", ev.spec);
  c_ev->add_option("--ckpt", ev.ckpt);
  c_ev->add_option("--manifest", ev.manifest);
  c_ev->add_option("--dataset-id", ev.dataset);
  c_ev->add_option("--out", ev.out, "report path (stdout when absent)");

  Params pr;
  auto* c_pr = app.add_subcommand("params", "parameter accounting");
  add_common(c_pr, pr.common);
  c_pr->add_option("--regime", pr.regime, "SDF, MDF or MoE-MDF");
  c_pr->add_option("--T", pr.T, "number of datasets");
  c_pr->add_option("--alpha", pr.alpha);
  c_pr->add_option("--out", pr.out);

  Report rep;
  auto* c_rep = app.add_subcommand("report", "plot-ready series from a metrics log");
  add_common(c_rep, rep.common);
  c_rep->add_option("--metrics-log", rep.log)->required();
  c_rep->add_option("--out", rep.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_gen) return run_gen_synth(gs);
    if (*c_inf) return run_infer(inf);
    if (*c_cur) return run_curate(cur);
    if (*c_pre) return run_pretrain(pre);
    if (*c_ft) return run_finetune(ft);
    if (*c_ev) return run_eval(ev);
    if (*c_pr) return run_params(pr);
    if (*c_rep) return run_report(rep);
  } catch (const Error& e) {
    std::cerr << "s5: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "s5: internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
