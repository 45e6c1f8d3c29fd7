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

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "dietnet/errors.hpp"
#include "dietnet/experiment.hpp"

namespace dietnet {

namespace {

constexpr std::string_view kCsvHeader =
    "run,plan,architecture,variant,balanced,freeze_mode,max_iterations,best_iteration,scope,samples,top_k,at1,at5,nat1";

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ValidationError(fmt::format("results line {}: unterminated quote", line_no));
  return fields;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

double pct(double v) { return 100.0 * v; }

}  // namespace

std::vector<ResultRow> result_rows(const std::vector<RunResult>& results) {
  std::vector<ResultRow> rows;
  for (const auto& r : results) {
    for (const auto& s : r.scopes) {
      ResultRow row;
      row.run = r.run;
      row.plan_id = r.plan_id;
      row.architecture = to_string(r.architecture);
      row.variant = to_string(r.variant);
      row.balanced = r.balanced;
      row.freeze_mode = to_string(r.freeze_mode);
      row.max_iterations = r.max_iterations;
      row.best_iteration = r.best_iteration;
      row.scope = s.scope;
      row.samples = s.samples;
      row.top_k = s.metrics.top_k_used;
      row.at1 = s.metrics.at1;
      row.at5 = s.metrics.at5;
      row.nat1 = s.metrics.nat1;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string results_csv(const std::vector<RunResult>& results) {
  std::string out(kCsvHeader);
  out += "\n";
  for (const auto& r : result_rows(results)) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.run), r.plan_id, r.architecture,
                       r.variant, r.balanced ? 1 : 0, r.freeze_mode, r.max_iterations, r.best_iteration,
                       csv_field(r.scope), r.samples, r.top_k, r.at1, r.at5, r.nat1);
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ValidationError("results file lacks the expected header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 14) throw ValidationError(fmt::format("results line {}: expected 14 fields, got {}", line_no, f.size()));
    try {
      ResultRow r;
      r.run = f[0];
      r.plan_id = std::stoi(f[1]);
      r.architecture = f[2];
      r.variant = f[3];
      r.balanced = f[4] == "1";
      r.freeze_mode = f[5];
      r.max_iterations = std::stoull(f[6]);
      r.best_iteration = std::stoull(f[7]);
      r.scope = f[8];
      r.samples = std::stoull(f[9]);
      r.top_k = std::stoull(f[10]);
      r.at1 = std::stod(f[11]);
      r.at5 = std::stod(f[12]);
      r.nat1 = std::stod(f[13]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ValidationError(fmt::format("results line {}: malformed number", line_no));
    }
  }
  return rows;
}

std::vector<RunResult> runs_from_rows(const std::vector<ResultRow>& rows) {
  std::vector<RunResult> runs;
  for (const auto& row : rows) {
    auto it = std::find_if(runs.begin(), runs.end(), [&](const RunResult& r) { return r.run == row.run; });
    if (it == runs.end()) {
      RunResult r;
      r.run = row.run;
      r.plan_id = row.plan_id;
      r.architecture = parse_architecture(row.architecture);
      r.variant = parse_variant(row.variant);
      r.balanced = row.balanced;
      r.freeze_mode = parse_freeze_mode(row.freeze_mode);
      r.max_iterations = row.max_iterations;
      r.best_iteration = row.best_iteration;
      runs.push_back(std::move(r));
      it = std::prev(runs.end());
    }
    ScopeResult s;
    s.scope = row.scope;
    s.samples = row.samples;
    s.metrics.top_k_used = row.top_k;
    s.metrics.at1 = row.at1;
    s.metrics.at5 = row.at5;
    s.metrics.nat1 = row.nat1;
    it->scopes.push_back(std::move(s));
  }
  return runs;
}

std::map<int, std::vector<ScopeScores>> scope_scores(const std::vector<RunResult>& results) {
  std::map<int, std::vector<ScopeScores>> table;
  for (const auto& r : results) {
    if (r.plan_id <= 0) continue;
    for (const auto& s : r.scopes) {
      table[r.plan_id].push_back({s.scope, pct(s.metrics.at1), pct(s.metrics.at5), pct(s.metrics.nat1)});
    }
  }
  return table;
}

std::string results_markdown(const std::vector<RunResult>& results) {
  std::string out = "# Results\n";
  bool any_plan = false, any_category = false;
  for (const auto& r : results) (r.plan_id > 0 ? any_plan : any_category) = true;

  if (any_plan) {
    out += "\n## Dish recognition (%)\n\n| Metric | Scope |";
    std::string rule = "|---|---|";
    for (const auto& r : results) {
      if (r.plan_id <= 0) continue;
      out += fmt::format(" {} {}{} |", r.plan_id, to_string(r.architecture), r.balanced ? " bal" : "");
      rule += "---|";
    }
    out += "\n" + rule + "\n";
    for (const char* scope : {"A,B", "B"}) {
      for (int metric = 0; metric < 3; ++metric) {
        out += fmt::format("| {} | {} |", metric == 0 ? "AT1" : metric == 1 ? "AT5" : "NAT1", scope);
        for (const auto& r : results) {
          if (r.plan_id <= 0) continue;
          const ScopeResult* s = nullptr;
          for (const auto& x : r.scopes)
            if (x.scope == scope) s = &x;
          if (!s) {
            out += " - |";
            continue;
          }
          const double v = metric == 0 ? s->metrics.at1 : metric == 1 ? s->metrics.at5 : s->metrics.nat1;
          out += fmt::format(" {:.2f} |", pct(v));
        }
        out += "\n";
      }
    }
    out += "\n| Plan | Net | Variant | Balanced | Best iteration | Iterations |\n|---|---|---|---|---|---|\n";
    for (const auto& r : results) {
      if (r.plan_id <= 0) continue;
      out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", r.plan_id, to_string(r.architecture), to_string(r.variant),
                         r.balanced ? "yes" : "no", r.best_iteration, r.max_iterations);
    }
    try {
      const auto ranking = aggregate_experiment_scores(scope_scores(results));
      out += "\n## Ranking\n\n" + format_ranking(ranking);
    } catch (const ValidationError&) {
      // a plan evaluated on one scope only has no aggregate score
    }
  }
  if (any_category) {
    out += "\n## Category recognition (%)\n\n| Mode | Iterations | Best iteration | AT1 | AT5 | NAT1 | Time (s) |\n"
           "|---|---|---|---|---|---|---|\n";
    for (const auto& r : results) {
      if (r.plan_id > 0 || r.scopes.empty()) continue;
      const auto& m = r.scopes.front().metrics;
      // runs rebuilt from results.csv carry no timing
      const std::string secs = r.seconds > 0.0 ? fmt::format("{:.1f}", r.seconds) : "-";
      out += fmt::format("| {} | {} | {} | {:.2f} | {:.2f} | {:.2f} | {} |\n", to_string(r.freeze_mode),
                         r.max_iterations, r.best_iteration, pct(m.at1), pct(m.at5), pct(m.nat1), secs);
    }
  }
  return out;
}

ReportOutput emit_report(const std::vector<RunResult>& results, const std::filesystem::path& out_dir,
                         const std::map<std::string, DatasetStats>& dimensions) {
  if (results.empty()) throw ContractError("no results to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
  ReportOutput out;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_file(out_dir / name, text);
    out.files.push_back(out_dir / name);
  };
  emit("results.csv", results_csv(results));
  emit("results.md", results_markdown(results));

  const auto table = scope_scores(results);
  if (!table.empty()) {
    try {
      emit("ranking.md", format_ranking(aggregate_experiment_scores(table)));
    } catch (const ValidationError& e) {
      out.warnings.push_back(fmt::format("no ranking: {}", e.what()));
    }
  }
  for (const auto& r : results) {
    if (r.scopes.empty() || r.scopes.front().metrics.confusion.empty()) {
      out.warnings.push_back(fmt::format("run {} has an empty confusion matrix; no heatmap written", r.run));
      continue;
    }
    const auto& s = r.scopes.front();
    emit(fmt::format("cm_{}.svg", r.run),
         confusion_svg(s.metrics.confusion, r.class_labels, fmt::format("{} normalised confusion ({})", r.run, s.scope)));
    emit(fmt::format("cm_{}.csv", r.run), confusion_csv(s.metrics.confusion, r.class_labels));
  }
  for (const auto& [name, stats] : dimensions) {
    emit(fmt::format("dims_{}.svg", name), dimensions_svg(stats, fmt::format("Image dimensions ({})", name)));
  }
  return out;
}

}  // namespace dietnet
