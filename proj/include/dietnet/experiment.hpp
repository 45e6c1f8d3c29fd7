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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dietnet/dataset.hpp"
#include "dietnet/metrics.hpp"
#include "dietnet/models.hpp"
#include "dietnet/samples.hpp"
#include "dietnet/super_resolution.hpp"
#include "dietnet/synthetic.hpp"

namespace dietnet {

enum class Architecture { inception, vgg_style };

/// "G" for inception, "V" for the VGG-style net.
std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view text);
std::string_view to_string(FreezeMode mode);
FreezeMode parse_freeze_mode(std::string_view text);

struct ExperimentPlan {
  int id = 1;
  Architecture architecture = Architecture::inception;
  DatasetVariant variant = DatasetVariant::original;
  bool balanced = false;

  friend bool operator==(const ExperimentPlan&, const ExperimentPlan&) = default;
};

/// The six dish-recognition experiments, in order.
std::vector<ExperimentPlan> plan_matrix();

struct TrainConfig {
  double learning_rate = 0.01;  // divided by 10 after each third of max_iterations
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t max_iterations = 300;
  std::size_t validation_interval = 50;
  std::uint64_t seed = 42;
  FreezeMode freeze_mode = FreezeMode::all_layers;
  double aux_discount = 0.3;

  /// Throws ValidationError on a non-positive rate, batch or interval, a
  /// momentum outside [0, 1) or a negative discount.
  void validate() const;
};

/// Learning rate in force during the 0-based iteration `iteration`.
double scheduled_learning_rate(const TrainConfig& config, std::size_t iteration);

/// Images held in memory at the unified resolution.
struct SampleSet {
  std::vector<RasterImage> images;
  std::vector<std::size_t> labels;
  std::vector<Source> sources;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }
};

/// Loads the records of `split` (all records for Split::unassigned) and
/// resizes them to options.resize. Labels are manifest class ids.
SampleSet load_samples(const Manifest& manifest, Split split, const SampleOptions& options);
SampleSet make_sample_set(const std::vector<LabeledImage>& images, std::size_t num_classes,
                          const SampleOptions& options);

struct TrainResult {
  std::size_t best_iteration = 0;
  double best_validation_at1 = 0.0;
  std::vector<double> loss_trace;  // mean batch loss per iteration
  std::vector<std::pair<std::size_t, double>> validation_trace;  // (iteration, AT1)
};

/// Mini-batch SGD with momentum and step decay. Validation AT1 is measured
/// before the first step, every validation_interval iterations and at the
/// end; the model is left holding the parameters of the best measurement
/// (earliest on ties). An empty validation set falls back to `train_set`.
/// Throws NumericError naming the iteration when the loss is not finite.
TrainResult train(Model& model, const SampleSet& train_set, const SampleSet& validation_set,
                  const TrainConfig& config, const SampleOptions& options);

/// Ranked predictions for every sample, in order, using central crops.
PredictionLog predict_log(const Model& model, const SampleSet& samples, const SampleOptions& options);

/// Scope "A,B" keeps every record, "A" and "B" keep one source.
bool in_scope(Source source, std::string_view scope);

/// Metrics over the test records of `scope`. Throws ContractError on an
/// unknown or empty scope.
MetricsReport evaluate(const Model& model, const SampleSet& test_set, std::string_view scope,
                       const SampleOptions& options);
MetricsReport evaluate(const Model& model, const Manifest& manifest, std::string_view scope,
                       const SampleOptions& options);

/// Desk-scale networks for a [3, crop, crop] input.
Model build_model(Architecture arch, std::size_t num_classes, std::size_t crop, std::uint64_t seed,
                  double aux_discount = 0.3);

struct ScopeResult {
  std::string scope;
  std::size_t samples = 0;
  MetricsReport metrics;
};

struct RunResult {
  std::string run;  // file-name friendly id, e.g. "exp1"
  int plan_id = 0;  // 0 for category runs
  Architecture architecture = Architecture::inception;
  DatasetVariant variant = DatasetVariant::original;
  bool balanced = false;
  FreezeMode freeze_mode = FreezeMode::all_layers;
  std::size_t max_iterations = 0;
  std::size_t best_iteration = 0;
  std::vector<ScopeResult> scopes;
  std::vector<std::string> class_labels;
  double seconds = 0.0;
};

struct ExperimentOptions {
  SampleOptions sample{32, 28, {0.0, 0.0, 0.0}};
  bool mean_from_train = true;  // replace sample.mean by the training-set mean
  TrainConfig train;
  SplitRatios ratios;
  std::size_t cap = 500;
  std::size_t sr_target = 32;
  std::filesystem::path source_root;  // mirrored by the variants
  std::filesystem::path work_dir;     // variants are materialised here
  ScnTrainOptions sr_train;
  std::size_t sr_epochs = 5;
  std::size_t sr_patches_per_image = 64;
  std::optional<std::filesystem::path> pretrained;
};

struct PlanOutcome {
  RunResult result;
  Manifest manifest;  // after variant, balancing and split
  TrainResult training;
  std::vector<std::string> warnings;
};

/// Variant, optional balancing, split (when not assigned yet), training and
/// evaluation on scopes "A,B" and "B". `bank` may be null for variants that
/// need no super-resolution.
PlanOutcome run_plan(const ExperimentPlan& plan, const Manifest& base, const ExperimentOptions& options,
                     const ScnBank* bank);

/// Parameters for every upscale factor needed to bring source-B records of
/// `manifest` up to `target`, trained on patches of the source-A images.
ScnBank train_sr_bank(const Manifest& manifest, std::size_t target, const ScnTrainOptions& options,
                      std::size_t epochs, std::size_t patches_per_image);

/// All six plans. A missing bank is trained from the source-A training images.
std::vector<PlanOutcome> run_matrix(const Manifest& base, const ExperimentOptions& options, const ScnBank* bank);

struct CategoryOutcome {
  RunResult result;
  TrainResult training;
  double train_at1 = 0.0;
  std::size_t excluded = 0;  // records without a category label
};

/// Category classifier trained in `mode`. Splits are assigned when missing.
CategoryOutcome run_category_experiment(FreezeMode mode, const Manifest& manifest, const ExperimentOptions& options);

// Report files --------------------------------------------------------------

/// One row of results.csv (one per run and scope).
struct ResultRow {
  std::string run;
  int plan_id = 0;
  std::string architecture;
  std::string variant;
  bool balanced = false;
  std::string freeze_mode;
  std::size_t max_iterations = 0;
  std::size_t best_iteration = 0;
  std::string scope;
  std::size_t samples = 0;
  std::size_t top_k = 0;
  double at1 = 0.0, at5 = 0.0, nat1 = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

std::vector<ResultRow> result_rows(const std::vector<RunResult>& results);
/// Timings are left out so identical runs give identical files.
std::string results_csv(const std::vector<RunResult>& results);
std::vector<ResultRow> parse_results_csv(const std::string& text);
/// Regroups rows by run (first appearance order). Confusion matrices and
/// timings are not part of the rows and stay empty.
std::vector<RunResult> runs_from_rows(const std::vector<ResultRow>& rows);

/// AT1/AT5/NAT1 in percent per scope, keyed by plan id (category runs skipped).
std::map<int, std::vector<ScopeScores>> scope_scores(const std::vector<RunResult>& results);

std::string results_markdown(const std::vector<RunResult>& results);

struct ReportOutput {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Writes results.csv, results.md, ranking.md, cm_<run>.svg / .csv and one
/// dims_<name>.svg per entry of `dimensions`. Throws ContractError on empty
/// results and IoError when out_dir cannot be written.
ReportOutput emit_report(const std::vector<RunResult>& results, const std::filesystem::path& out_dir,
                         const std::map<std::string, DatasetStats>& dimensions = {});

}  // namespace dietnet
