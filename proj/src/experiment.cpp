// Copyright 2026 The dietnet Authors
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

#include <chrono>
#include <fmt/format.h>
#include <set>

#include "dietnet/checkpoint.hpp"
#include "dietnet/errors.hpp"
#include "dietnet/experiment.hpp"

namespace dietnet {

std::string_view to_string(Architecture arch) { return arch == Architecture::inception ? "G" : "V"; }

Architecture parse_architecture(std::string_view text) {
  if (text == "G" || text == "inception") return Architecture::inception;
  if (text == "V" || text == "vgg_style" || text == "vgg") return Architecture::vgg_style;
  throw ValidationError(fmt::format("unknown architecture \"{}\" (expected G or V)", text));
}

std::string_view to_string(FreezeMode mode) { return mode == FreezeMode::all_layers ? "all_layers" : "last_fc_only"; }

FreezeMode parse_freeze_mode(std::string_view text) {
  if (text == "all_layers") return FreezeMode::all_layers;
  if (text == "last_fc_only") return FreezeMode::last_fc_only;
  throw ValidationError(fmt::format("unknown freeze mode \"{}\" (expected all_layers or last_fc_only)", text));
}

std::vector<ExperimentPlan> plan_matrix() {
  using A = Architecture;
  using V = DatasetVariant;
  return {
      {1, A::inception, V::b_super_resolved, false}, {2, A::inception, V::b_super_resolved, true},
      {3, A::inception, V::a_halved, false},         {4, A::inception, V::a_halved, true},
      {5, A::vgg_style, V::original, false},         {6, A::vgg_style, V::original, true},
  };
}

namespace {

bool fully_split(const Manifest& m) {
  for (const auto& r : m.records())
    if (r.split == Split::unassigned) return false;
  return true;
}

void ensure_split(Manifest& m, const SplitRatios& ratios, std::uint64_t seed, std::vector<std::string>& warnings) {
  if (fully_split(m)) return;
  auto outcome = split_dataset(m, ratios, seed);
  m = std::move(outcome.manifest);
  warnings.insert(warnings.end(), outcome.warnings.begin(), outcome.warnings.end());
}

struct LoadedSplits {
  SampleSet train, val, test;
  SampleOptions sample;
};

LoadedSplits load_splits(const Manifest& m, const ExperimentOptions& options) {
  LoadedSplits s;
  s.sample = options.sample;
  s.train = load_samples(m, Split::train, s.sample);
  s.val = load_samples(m, Split::val, s.sample);
  s.test = load_samples(m, Split::test, s.sample);
  if (s.train.empty()) throw ValidationError("the training split is empty");
  if (options.mean_from_train) s.sample.mean = channel_means(s.train.images);
  return s;
}

void load_pretrained(Model& model, const ExperimentOptions& options, std::vector<std::string>* warnings) {
  if (!options.pretrained) return;
  const auto params = load_checkpoint(*options.pretrained);
  const auto taken = model.load_matching(params);
  if (warnings && taken == 0) warnings->push_back(fmt::format("{} shares no tensor with the model", options.pretrained->string()));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

PlanOutcome run_plan(const ExperimentPlan& plan, const Manifest& base, const ExperimentOptions& options,
                     const ScnBank* bank) {
  const auto t0 = std::chrono::steady_clock::now();
  PlanOutcome out;
  VariantOptions vo;
  vo.source_root = options.source_root;
  if (!options.work_dir.empty()) vo.out_root = options.work_dir / std::string(to_string(plan.variant));
  vo.target = options.sr_target;
  auto variant = apply_variant(base, plan.variant, bank, vo);
  out.warnings = variant.errors;
  Manifest m = std::move(variant.manifest);
  if (plan.balanced) m = balance_classes(m, options.cap, options.train.seed);
  ensure_split(m, options.ratios, options.train.seed, out.warnings);

  const auto data = load_splits(m, options);
  Model model = build_model(plan.architecture, m.class_count(), data.sample.crop, options.train.seed,
                            options.train.aux_discount);
  load_pretrained(model, options, &out.warnings);
  out.training = train(model, data.train, data.val, options.train, data.sample);

  auto& r = out.result;
  r.run = fmt::format("exp{}", plan.id);
  r.plan_id = plan.id;
  r.architecture = plan.architecture;
  r.variant = plan.variant;
  r.balanced = plan.balanced;
  r.freeze_mode = options.train.freeze_mode;
  r.max_iterations = options.train.max_iterations;
  r.best_iteration = out.training.best_iteration;
  r.class_labels = m.class_names();
  for (const char* scope : {"A,B", "B"}) {
    ScopeResult s;
    s.scope = scope;
    s.metrics = evaluate(model, data.test, scope, data.sample);
    for (auto src : data.test.sources) s.samples += in_scope(src, scope) ? 1 : 0;
    r.scopes.push_back(std::move(s));
  }
  r.seconds = seconds_since(t0);
  out.manifest = std::move(m);
  return out;
}

ScnBank train_sr_bank(const Manifest& manifest, std::size_t target, const ScnTrainOptions& options,
                      std::size_t epochs, std::size_t patches_per_image) {
  std::set<std::size_t> factors;
  for (const auto& r : manifest.records()) {
    if (r.source != Source::B) continue;
    const auto size = read_pnm_size(r.image_path);
    const auto f = upscale_factor(size.width, size.height, target);
    if (f > 1) factors.insert(f);
  }
  std::vector<RasterImage> images;
  for (const auto& r : manifest.records()) {
    if (r.source == Source::A && (r.split == Split::train || r.split == Split::unassigned)) {
      images.push_back(read_pnm(r.image_path));
    }
  }
  ScnBank bank;
  for (auto f : factors) {
    const auto pairs = make_patch_pairs(images, f, options.config.patch_size, patches_per_image, options.seed + f);
    if (pairs.empty()) {
      throw ValidationError(fmt::format("no source-A training image is large enough for factor {}", f));
    }
    bank.add(train_scn(pairs, f, epochs, options).params);
  }
  return bank;
}

std::vector<PlanOutcome> run_matrix(const Manifest& base, const ExperimentOptions& options, const ScnBank* bank) {
  // one split shared by all plans keeps the test records comparable
  Manifest m = base;
  std::vector<std::string> split_warnings;
  ensure_split(m, options.ratios, options.train.seed, split_warnings);
  const auto plans = plan_matrix();
  ScnBank trained;
  if (!bank) {
    trained = train_sr_bank(m, options.sr_target, options.sr_train, options.sr_epochs, options.sr_patches_per_image);
    bank = &trained;
  }
  std::vector<PlanOutcome> outcomes;
  for (const auto& plan : plans) {
    outcomes.push_back(run_plan(plan, m, options, bank));
    if (outcomes.size() == 1) {
      auto& w = outcomes.front().warnings;
      w.insert(w.begin(), split_warnings.begin(), split_warnings.end());
    }
  }
  return outcomes;
}

CategoryOutcome run_category_experiment(FreezeMode mode, const Manifest& manifest, const ExperimentOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  CategoryOutcome out;
  auto view = to_category_manifest(manifest);
  out.excluded = view.dropped;
  Manifest m = std::move(view.manifest);
  if (m.empty()) throw ValidationError("no record carries a category label");
  std::vector<std::string> warnings;
  ensure_split(m, options.ratios, options.train.seed, warnings);

  const auto data = load_splits(m, options);
  Model model = build_model(Architecture::inception, m.class_count(), data.sample.crop, options.train.seed,
                            options.train.aux_discount);
  load_pretrained(model, options, nullptr);
  auto config = options.train;
  config.freeze_mode = mode;
  out.training = train(model, data.train, data.val, config, data.sample);
  out.train_at1 = accuracy_top_k(predict_log(model, data.train, data.sample), 1);

  auto& r = out.result;
  r.run = fmt::format("category_{}", to_string(mode));
  r.freeze_mode = mode;
  r.max_iterations = config.max_iterations;
  r.best_iteration = out.training.best_iteration;
  r.class_labels = m.class_names();
  ScopeResult s;
  s.scope = "A,B";
  s.metrics = evaluate(model, data.test, s.scope, data.sample);
  s.samples = data.test.size();
  r.scopes.push_back(std::move(s));
  r.seconds = seconds_since(t0);
  return out;
}

}  // namespace dietnet
