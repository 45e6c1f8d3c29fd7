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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dietnet {

struct PredictionEntry {
  std::size_t true_class = 0;
  std::vector<std::size_t> ranked;  // class ids, best first

  friend bool operator==(const PredictionEntry&, const PredictionEntry&) = default;
};

struct PredictionLog {
  std::vector<PredictionEntry> entries;
  std::size_t num_classes = 0;

  /// Throws ValidationError on out-of-range or duplicate class ids.
  void validate() const;

  friend bool operator==(const PredictionLog&, const PredictionLog&) = default;
};

// One line per entry: "<true>\t<id>,<id>,...". A leading "# classes=N" line
// carries the class count.
std::string format_prediction_log(const PredictionLog& log);
PredictionLog parse_prediction_log(const std::string& text);
void save_prediction_log(const std::filesystem::path& path, const PredictionLog& log);
PredictionLog load_prediction_log(const std::filesystem::path& path);

/// Fraction of entries whose true class is among the first k ranked ids.
/// Throws ContractError on an empty log, k = 0, or an entry with fewer than k
/// predictions.
double accuracy_top_k(const PredictionLog& log, std::size_t k);

/// Mean over classes with at least one entry of the per-class top-1 accuracy.
double normalized_accuracy_top1(const PredictionLog& log);

/// (i, j) counts entries of true class i whose top prediction is j; when
/// normalised, every non-empty row is divided by its count.
std::vector<std::vector<double>> confusion_matrix(const PredictionLog& log, bool normalize);

struct MetricsReport {
  double at1 = 0.0, at5 = 0.0, nat1 = 0.0;
  std::vector<std::vector<double>> confusion;  // normalised
  std::vector<std::size_t> per_class_counts;
  std::size_t top_k_used = 5;  // min(5, N)
};

/// AT5 uses k = min(5, num_classes) so logs over fewer than five classes stay defined.
MetricsReport compute_metrics(const PredictionLog& log);

struct ScopeScores {
  std::string scope;  // "A,B" or "B"
  double at1 = 0.0, at5 = 0.0, nat1 = 0.0;
};

struct RankedExperiment {
  int experiment = 0;
  double score = 0.0;  // AT1 + AT5 over the "A,B" and "B" scopes
};

/// Descending by score, ties to the lower experiment id. Throws
/// ValidationError when an experiment lacks one of the two scopes.
std::vector<RankedExperiment> aggregate_experiment_scores(const std::map<int, std::vector<ScopeScores>>& results);

/// Markdown ranking with the winner flagged.
std::string format_ranking(const std::vector<RankedExperiment>& ranking);

/// Confusion matrix as CSV with a header row of labels.
std::string confusion_csv(const std::vector<std::vector<double>>& cm, const std::vector<std::string>& labels);
std::string confusion_svg(const std::vector<std::vector<double>>& cm, const std::vector<std::string>& labels,
                          const std::string& title);

}  // namespace dietnet
