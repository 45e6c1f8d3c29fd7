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

#include "dietnet/metrics.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <fstream>
#include <sstream>

#include "dietnet/errors.hpp"
#include "dietnet/svg.hpp"

namespace dietnet {

void PredictionLog::validate() const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.true_class >= num_classes) {
      throw ValidationError(fmt::format("entry {}: true class {} outside [0, {})", i, e.true_class, num_classes));
    }
    std::vector<bool> seen(num_classes, false);
    for (auto c : e.ranked) {
      if (c >= num_classes) throw ValidationError(fmt::format("entry {}: predicted class {} outside [0, {})", i, c, num_classes));
      if (seen[c]) throw ValidationError(fmt::format("entry {}: class {} ranked twice", i, c));
      seen[c] = true;
    }
  }
}

std::string format_prediction_log(const PredictionLog& log) {
  std::string out = fmt::format("# classes={}\n", log.num_classes);
  for (const auto& e : log.entries) out += fmt::format("{}\t{}\n", e.true_class, fmt::join(e.ranked, ","));
  return out;
}

PredictionLog parse_prediction_log(const std::string& text) {
  PredictionLog log;
  bool have_classes = false;
  std::istringstream in(text);
  std::size_t line_no = 0;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("prediction log line {}: '{}' is not a class id", line_no, s));
    }
  };
  std::size_t max_id = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# classes=", 0) == 0) {
      log.num_classes = number(line.substr(10));
      have_classes = true;
      continue;
    }
    if (line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError(fmt::format("prediction log line {}: missing tab", line_no));
    PredictionEntry e;
    e.true_class = number(line.substr(0, tab));
    max_id = std::max(max_id, e.true_class);
    std::istringstream ids(line.substr(tab + 1));
    for (std::string id; std::getline(ids, id, ',');) {
      e.ranked.push_back(number(id));
      max_id = std::max(max_id, e.ranked.back());
    }
    log.entries.push_back(std::move(e));
  }
  if (!have_classes) log.num_classes = log.entries.empty() ? 0 : max_id + 1;
  log.validate();
  return log;
}

void save_prediction_log(const std::filesystem::path& path, const PredictionLog& log) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << format_prediction_log(log);
}

PredictionLog load_prediction_log(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_prediction_log(buf.str());
}

namespace {

void require_nonempty(const PredictionLog& log, const char* what) {
  if (log.entries.empty()) throw ContractError(fmt::format("{} is undefined on an empty prediction log", what));
}

bool top1_hit(const PredictionEntry& e) { return !e.ranked.empty() && e.ranked.front() == e.true_class; }

}  // namespace

double accuracy_top_k(const PredictionLog& log, std::size_t k) {
  require_nonempty(log, "top-k accuracy");
  if (k == 0) throw ContractError("top-k accuracy needs k >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < log.entries.size(); ++i) {
    const auto& e = log.entries[i];
    if (e.ranked.size() < k) {
      throw ContractError(fmt::format("entry {} ranks {} classes, top-{} requested", i, e.ranked.size(), k));
    }
    if (std::find(e.ranked.begin(), e.ranked.begin() + static_cast<std::ptrdiff_t>(k), e.true_class) !=
        e.ranked.begin() + static_cast<std::ptrdiff_t>(k)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(log.entries.size());
}

double normalized_accuracy_top1(const PredictionLog& log) {
  require_nonempty(log, "normalized top-1 accuracy");
  std::vector<std::size_t> count(log.num_classes, 0), hits(log.num_classes, 0);
  for (const auto& e : log.entries) {
    if (e.true_class >= log.num_classes) throw ValidationError("true class outside the class range");
    ++count[e.true_class];
    if (top1_hit(e)) ++hits[e.true_class];
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < log.num_classes; ++c) {
    if (count[c] == 0) continue;
    sum += static_cast<double>(hits[c]) / static_cast<double>(count[c]);
    ++present;
  }
  return sum / static_cast<double>(present);
}

std::vector<std::vector<double>> confusion_matrix(const PredictionLog& log, bool normalize) {
  const std::size_t n = log.num_classes;
  std::vector<std::vector<double>> cm(n, std::vector<double>(n, 0.0));
  for (const auto& e : log.entries) {
    if (e.ranked.empty()) throw ContractError("confusion matrix needs a top prediction for every entry");
    if (e.true_class >= n || e.ranked.front() >= n) throw ValidationError("class id outside the class range");
    cm[e.true_class][e.ranked.front()] += 1.0;
  }
  if (normalize) {
    for (auto& row : cm) {
      double total = 0.0;
      for (double v : row) total += v;
      if (total > 0.0) {
        for (double& v : row) v /= total;
      }
    }
  }
  return cm;
}

MetricsReport compute_metrics(const PredictionLog& log) {
  MetricsReport r;
  r.top_k_used = std::min<std::size_t>(5, log.num_classes);
  r.at1 = accuracy_top_k(log, 1);
  r.at5 = accuracy_top_k(log, r.top_k_used);
  r.nat1 = normalized_accuracy_top1(log);
  r.confusion = confusion_matrix(log, true);
  r.per_class_counts.assign(log.num_classes, 0);
  for (const auto& e : log.entries) ++r.per_class_counts[e.true_class];
  return r;
}

std::vector<RankedExperiment> aggregate_experiment_scores(const std::map<int, std::vector<ScopeScores>>& results) {
  std::vector<RankedExperiment> ranking;
  for (const auto& [id, scopes] : results) {
    double score = 0.0;
    for (const char* needed : {"A,B", "B"}) {
      auto it = std::find_if(scopes.begin(), scopes.end(), [&](const ScopeScores& s) { return s.scope == needed; });
      if (it == scopes.end()) throw ValidationError(fmt::format("experiment {} lacks scope \"{}\"", id, needed));
      score += it->at1 + it->at5;
    }
    ranking.push_back({id, score});
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const RankedExperiment& a, const RankedExperiment& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.experiment < b.experiment;
  });
  return ranking;
}

std::string format_ranking(const std::vector<RankedExperiment>& ranking) {
  std::string out = "| rank | experiment | AT1+AT5 (A,B and B) |\n|---|---|---|\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out += fmt::format("| {} | {}{} | {:.2f} |\n", i + 1, ranking[i].experiment, i == 0 ? " (best)" : "", ranking[i].score);
  }
  return out;
}

std::string confusion_csv(const std::vector<std::vector<double>>& cm, const std::vector<std::string>& labels) {
  auto label = [&](std::size_t i) { return i < labels.size() ? labels[i] : std::to_string(i); };
  std::string out = "true\\predicted";
  for (std::size_t j = 0; j < cm.size(); ++j) out += "," + label(j);
  out += "\n";
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out += label(i);
    for (double v : cm[i]) out += fmt::format(",{:.6f}", v);
    out += "\n";
  }
  return out;
}

std::string confusion_svg(const std::vector<std::vector<double>>& cm, const std::vector<std::string>& labels,
                          const std::string& title) {
  return svg::heatmap(cm, labels, title);
}

}  // namespace dietnet
