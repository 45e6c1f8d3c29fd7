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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dietnet/errors.hpp"
#include "dietnet/experiment.hpp"
#include "dietnet/gradcheck.hpp"
#include "dietnet/rng.hpp"
#include "dietnet/synthetic.hpp"

using namespace dietnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

NamedParameter trainable(std::string name, Tensor t) {
  t.set_requires_grad(true);
  return {std::move(name), std::move(t)};
}

// Random linear functional of y, so every output element reaches the loss.
NodeId project(Graph& g, NodeId y, Rng& rng) {
  const std::size_t n = g.value(y).numel();
  Tensor w({1, n});
  for (auto& v : w.data()) v = rng.uniform(-1.0, 1.0);
  return g.sum(g.linear(g.reshape(y, {n}), g.constant(std::move(w)), g.constant(Tensor({1}, 0.0))));
}

// ---------------------------------------------------------------------------

Outcome gradient_integrity() {
  constexpr int kInstances = 20;
  GradCheckOptions opts;  // step 1e-3, tolerance 1e-3
  Rng rng(7001);
  std::map<std::string, int> passed;
  std::string worst;
  double max_err = 0.0;
  using Builder = std::function<NodeId(Graph&, std::vector<NamedParameter>&)>;
  auto run = [&](const std::string& op, std::vector<NamedParameter> params, const Builder& build) {
    const std::uint64_t seed = rng.next();
    const auto report = check_gradients(
        params,
        [&](Graph& g) {
          Rng proj(seed);
          return project(g, build(g, params), proj);
        },
        opts);
    if (report.max_relative_error > max_err) {
      max_err = report.max_relative_error;
      worst = op + " " + report.worst;
    }
    if (report.passed(opts.tolerance) && report.checked > report.skipped_at_kinks) ++passed[op];
  };
  auto p = [](Graph& g, std::vector<NamedParameter>& ps, std::size_t i) { return g.parameter(ps[i].tensor, i); };

  for (int t = 0; t < kInstances; ++t) {
    const std::size_t stride = 1 + rng.index(2), pad = rng.index(2);
    run("conv2d",
        {trainable("x", random_tensor({2, 5, 5}, rng)), trainable("k", random_tensor({3, 2, 3, 3}, rng)),
         trainable("b", random_tensor({3}, rng))},
        [&](Graph& g, auto& ps) { return g.conv2d(p(g, ps, 0), p(g, ps, 1), p(g, ps, 2), stride, pad); });
    const std::size_t window = 2 + rng.index(2);
    run("maxpool2d", {trainable("x", random_tensor({2, 6, 6}, rng))},
        [&](Graph& g, auto& ps) { return g.maxpool2d(p(g, ps, 0), window, 2, window == 3 ? 1 : 0); });
    run("concat_channels", {trainable("a", random_tensor({1, 3, 3}, rng)), trainable("b", random_tensor({2, 3, 3}, rng))},
        [&](Graph& g, auto& ps) {
          std::array<NodeId, 2> ids{p(g, ps, 0), p(g, ps, 1)};
          return g.concat_channels(ids);
        });
    run("linear",
        {trainable("x", random_tensor({4}, rng)), trainable("w", random_tensor({3, 4}, rng)),
         trainable("b", random_tensor({3}, rng))},
        [&](Graph& g, auto& ps) { return g.linear(p(g, ps, 0), p(g, ps, 1), p(g, ps, 2)); });
    run("matmul", {trainable("a", random_tensor({3, 4}, rng)), trainable("b", random_tensor({4, 2}, rng))},
        [&](Graph& g, auto& ps) { return g.matmul(p(g, ps, 0), p(g, ps, 1)); });
    run("relu", {trainable("x", random_tensor({3, 4}, rng))}, [&](Graph& g, auto& ps) { return g.relu(p(g, ps, 0)); });
    run("add", {trainable("a", random_tensor({5}, rng)), trainable("b", random_tensor({5}, rng))},
        [&](Graph& g, auto& ps) { return g.add(p(g, ps, 0), p(g, ps, 1)); });
    const double factor = rng.uniform(-2.0, 2.0);
    run("scale", {trainable("x", random_tensor({5}, rng))},
        [&](Graph& g, auto& ps) { return g.scale(p(g, ps, 0), factor); });
    run("sum", {trainable("x", random_tensor({2, 3}, rng))}, [&](Graph& g, auto& ps) { return g.sum(p(g, ps, 0)); });
    run("mean", {trainable("x", random_tensor({2, 3}, rng))}, [&](Graph& g, auto& ps) { return g.mean(p(g, ps, 0)); });
    run("global_avg_pool", {trainable("x", random_tensor({3, 4, 4}, rng))},
        [&](Graph& g, auto& ps) { return g.global_avg_pool(p(g, ps, 0)); });
    run("reshape", {trainable("x", random_tensor({2, 6}, rng))},
        [&](Graph& g, auto& ps) { return g.reshape(p(g, ps, 0), {3, 4}); });
    const std::size_t target = rng.index(4);
    run("softmax_cross_entropy", {trainable("z", random_tensor({4}, rng, -3.0, 3.0))},
        [&](Graph& g, auto& ps) { return g.softmax_cross_entropy(p(g, ps, 0), target); });
    run("soft_threshold",
        {trainable("a", random_tensor({3, 4}, rng)), trainable("theta", random_tensor({3}, rng, 0.05, 0.5))},
        [&](Graph& g, auto& ps) { return g.soft_threshold(p(g, ps, 0), p(g, ps, 1)); });
    run("exp", {trainable("x", random_tensor({5}, rng))}, [&](Graph& g, auto& ps) { return g.exp(p(g, ps, 0)); });
    Tensor goal = random_tensor({2, 3}, rng);
    run("mse", {trainable("y", random_tensor({2, 3}, rng))},
        [&, goal](Graph& g, auto& ps) { return g.mse(p(g, ps, 0), g.constant(goal)); });
  }

  GradCheckOptions net_opts = opts;
  net_opts.max_elements_per_tensor = 6;
  const std::vector<std::size_t> depths{1, 1}, channels{3, 4};
  for (int t = 0; t < kInstances; ++t) {
    Model inc(toy_inception_spec(3, {3, 8, 8}), rng.next());
    Model vgg = build_vgg_style_net(depths, channels, 3, {3, 8, 8}, rng.next(), 6);
    for (auto [name, m] : {std::pair{"inception net", &inc}, std::pair{"vgg-style net", &vgg}}) {
      m->apply_freeze_mode(FreezeMode::all_layers);
      const auto x = random_tensor(m->spec().input_shape, rng);
      const std::size_t y = rng.index(3);
      const auto report = check_gradients(
          m->parameters(),
          [&](Graph& g) {
            const auto out = m->forward(g, g.constant(x));
            std::vector<NodeId> aux;
            for (auto a : out.aux_logits) aux.push_back(g.softmax_cross_entropy(a, y));
            return total_loss(g, g.softmax_cross_entropy(out.logits, y), aux, 0.3);
          },
          net_opts);
      if (report.max_relative_error > max_err) {
        max_err = report.max_relative_error;
        worst = std::string(name) + " " + report.worst;
      }
      if (report.passed(opts.tolerance) && report.checked > report.skipped_at_kinks) ++passed[name];
    }
  }
  bool ok = passed.size() == 18;
  std::string failing;
  for (const auto& [name, n] : passed) {
    if (n < kInstances) {
      ok = false;
      failing += fmt::format(" {}:{}/{}", name, n, kInstances);
    }
  }
  return {ok, fmt::format("{} checks x {} instances, max rel err {:.2e}{}{}", passed.size(), kInstances, max_err,
                          failing.empty() ? "" : "; failing" + failing, ok ? "" : "; worst " + worst)};
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
  Rng rng(8080);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    PredictionLog log;
    log.num_classes = 1 + rng.index(50);
    const std::size_t n = 1 + rng.index(1000);
    std::vector<std::size_t> ids(log.num_classes);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      rng.shuffle(std::span<std::size_t>(ids));
      log.entries.push_back({rng.index(log.num_classes), ids});
    }
    const std::size_t k5 = std::min<std::size_t>(5, log.num_classes);
    // oracle: set membership and per-class tallies
    std::size_t hit1 = 0, hit5 = 0;
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> per;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> cells;
    for (const auto& e : log.entries) {
      const std::set<std::size_t> top(e.ranked.begin(), e.ranked.begin() + static_cast<long>(k5));
      hit1 += e.ranked[0] == e.true_class;
      hit5 += top.count(e.true_class);
      auto& [h, c] = per[e.true_class];
      h += e.ranked[0] == e.true_class;
      ++c;
      ++cells[{e.true_class, e.ranked[0]}];
    }
    double nat1 = 0.0;
    for (const auto& [cls, hc] : per) nat1 += static_cast<double>(hc.first) / static_cast<double>(hc.second);
    nat1 /= static_cast<double>(per.size());
    const auto report = compute_metrics(log);
    bool same = report.at1 == static_cast<double>(hit1) / static_cast<double>(n) &&
                report.at5 == static_cast<double>(hit5) / static_cast<double>(n) && report.nat1 == nat1;
    for (std::size_t i = 0; i < log.num_classes && same; ++i) {
      for (std::size_t j = 0; j < log.num_classes; ++j) {
        auto it = cells.find({i, j});
        const double count = it == cells.end() ? 0.0 : static_cast<double>(it->second);
        auto pit = per.find(i);
        const double expect = pit == per.end() ? 0.0 : count / static_cast<double>(pit->second.second);
        if (report.confusion[i][j] != expect) same = false;
      }
    }
    mismatches += same ? 0 : 1;
  }
  return {mismatches == 0, fmt::format("200 random logs, {} mismatches", mismatches)};
}

// ---------------------------------------------------------------------------

Outcome reference_score_arithmetic() {
  std::map<int, std::vector<ScopeScores>> table;
  table[1] = {{"A,B", 68.07, 89.53, 0.0}, {"B", 50.02, 81.82, 0.0}};
  table[6] = {{"A,B", 65.16, 88.94, 0.0}, {"B", 50.59, 83.40, 0.0}};
  const auto ranking = aggregate_experiment_scores(table);
  const bool ok = ranking.size() == 2 && ranking[0].experiment == 1 && std::abs(ranking[0].score - 289.44) <= 1e-9 &&
                  ranking[1].experiment == 6 && std::abs(ranking[1].score - 288.09) <= 1e-9;
  return {ok, fmt::format("exp {} -> {:.10f}, exp {} -> {:.10f}", ranking[0].experiment, ranking[0].score,
                          ranking[1].experiment, ranking[1].score)};
}

Outcome sr_factor_rule() {
  const auto a = upscale_factor(402, 125), b = upscale_factor(512, 512), c = upscale_factor(250, 250);
  return {a == 3 && b == 1 && c == 2, fmt::format("(402,125)->{} (512,512)->{} (250,250)->{}", a, b, c)};
}

Outcome soft_threshold_law() {
  Rng rng(515);
  std::size_t disagree = 0, dead_zone = 0, shrink = 0;
  double max_diff = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(-5.0, 5.0);
    const double theta = rng.uniform(1e-6, 3.0);
    const double r = soft_threshold_ramp_form(a, theta);
    const double u = soft_threshold_unit_form(a, theta);
    const double s = soft_threshold(a, theta);
    max_diff = std::max(max_diff, std::abs(r - u));
    if (std::abs(r - u) > 1e-12) ++disagree;
    if (std::abs(a) <= theta && s != 0.0) ++dead_zone;
    if (std::abs(a) > theta && (s != a - std::copysign(theta, a) || std::abs(s) >= std::abs(a))) ++shrink;
  }
  return {disagree == 0 && dead_zone == 0 && shrink == 0,
          fmt::format("1e5 pairs, max |ramp - unit| {:.1e}, dead-zone violations {}, shrinkage violations {}",
                      max_diff, dead_zone, shrink)};
}

// ---------------------------------------------------------------------------

Outcome sr_quality() {
  std::vector<RasterImage> train_imgs, held_imgs;
  for (std::size_t c = 0; c < 8; ++c) {
    for (std::size_t i = 0; i < 3; ++i) train_imgs.push_back(render_class_image(c, i, 64, 64, 11));
    held_imgs.push_back(render_class_image(c, 100 + c, 64, 64, 12));
  }
  const std::size_t factor = 2;
  ScnTrainOptions opt;  // 8 px patches, 64 atoms, 3 iterations
  const auto train_pairs = make_patch_pairs(train_imgs, factor, opt.config.patch_size, 128, 1);
  const auto held = make_patch_pairs(held_imgs, factor, opt.config.patch_size, 128, 2);
  const auto trained = train_scn(train_pairs, factor, 5, opt);
  const auto& p = trained.params;
  const bool tiny = p.patch_size == 8 && p.dict_atoms == 64 && p.iterations == 3;
  const double scn = 10.0 * std::log10(1.0 / scn_loss(held, p));
  const double bic = 10.0 * std::log10(1.0 / bicubic_loss(held, p.patch_size, factor));
  return {tiny && scn >= bic, fmt::format("held-out {} patches: SCN {:.3f} dB vs bicubic {:.3f} dB", held.size(), scn, bic)};
}

Outcome overfit(Architecture arch, std::size_t budget) {
  const auto images = synthetic_image_set(4, 16, 32, 7);
  SampleOptions opts{32, 28, {}};
  const auto set = make_sample_set(images, 4, opts);
  opts.mean = channel_means(set.images);
  auto model = build_model(arch, 4, 28, 42);
  TrainConfig c;
  c.max_iterations = budget;
  c.validation_interval = 10;
  const auto r = train(model, set, set, c, opts);
  const double at1 = accuracy_top_k(predict_log(model, set, opts), 1);
  // first logged iteration at which the training set was fitted
  std::size_t reached = 0;
  for (const auto& [it, acc] : r.validation_trace) {
    if (acc == 1.0) {
      reached = it;
      break;
    }
  }
  return {at1 == 1.0 && r.best_iteration <= budget,
          fmt::format("train AT1 {:.4f}, first fitted at iteration {} of {}", at1, reached, budget)};
}

Outcome freeze_semantics() {
  const auto spec = toy_inception_spec(3, {3, 12, 12});
  Rng data(99);
  auto step = [&](Model& m, SgdState& st) {
    zero_grads(m.parameters());
    Graph g;
    const auto out = m.forward(g, g.constant(random_tensor(spec.input_shape, data)));
    std::vector<NodeId> aux;
    for (auto a : out.aux_logits) aux.push_back(g.softmax_cross_entropy(a, 0));
    g.backward(total_loss(g, g.softmax_cross_entropy(out.logits, 1), aux, 0.3));
    g.accumulate_into(m.parameters());
    sgd_step(m.parameters(), 0.01, 0.9, st);
  };
  Model frozen(spec, 5);
  frozen.apply_freeze_mode(FreezeMode::last_fc_only);
  std::vector<Tensor> before;
  for (const auto& p : frozen.parameters()) before.push_back(p.tensor);
  SgdState st;
  for (int i = 0; i < 100; ++i) step(frozen, st);
  std::size_t moved_frozen = 0, backbone = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (frozen.is_classifier(i)) continue;
    ++backbone;
    if (frozen.parameters()[i].tensor.values() != before[i].values()) ++moved_frozen;
  }
  Model open(spec, 5);
  open.apply_freeze_mode(FreezeMode::all_layers);
  before.clear();
  for (const auto& p : open.parameters()) before.push_back(p.tensor);
  SgdState st2;
  step(open, st2);
  std::size_t unchanged = 0, zero_grad = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const auto& t = open.parameters()[i].tensor;
    if (t.values() == before[i].values()) ++unchanged;
    double norm = 0.0;
    for (double v : t.grad()) norm += v * v;
    if (norm == 0.0) ++zero_grad;
  }
  return {moved_frozen == 0 && unchanged == 0 && zero_grad == 0 && backbone > 0,
          fmt::format("last_fc_only: {}/{} backbone tensors moved after 100 steps; all_layers: {} of {} tensors "
                      "unchanged, {} with zero gradient after 1 step",
                      moved_frozen, backbone, unchanged, before.size(), zero_grad)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

Outcome pipeline_determinism() {
  const auto root = fs::temp_directory_path() / "dietnet_acceptance_matrix";
  fs::remove_all(root);
  SyntheticOptions so;  // bundled mini-dataset, seed 42
  const auto manifest = generate_synthetic_dataset(root / "data", so);
  std::vector<std::string> csv;
  for (int run = 0; run < 2; ++run) {
    ExperimentOptions opts;
    opts.train.seed = 42;
    opts.work_dir = root / fmt::format("work{}", run);
    std::vector<RunResult> results;
    for (auto& o : run_matrix(manifest, opts, nullptr)) results.push_back(o.result);
    const auto out = root / fmt::format("report{}", run);
    emit_report(results, out);
    csv.push_back(slurp(out / "results.csv"));
  }
  const bool ok = csv[0] == csv[1] && parse_results_csv(csv[0]).size() == 12;
  fs::remove_all(root);
  return {ok, fmt::format("two runs, results.csv {} bytes, {}", csv[0].size(), csv[0] == csv[1] ? "identical" : "DIFFERENT")};
}

Outcome balancing_splitting() {
  std::vector<SampleRecord> recs;
  for (std::size_t c = 0; c < 101; ++c)
    for (std::size_t i = 0; i < 1000; ++i)
      recs.push_back({fmt::format("/f/{}/{}.ppm", c, i), fmt::format("dish{}", c), std::nullopt, Source::A, Split::unassigned});
  const auto split = split_dataset(Manifest(recs), {}, 42).manifest;
  std::map<Split, std::size_t> tally;
  for (const auto& r : split.records()) ++tally[r.split];
  bool ok = tally[Split::train] == 80800 && tally[Split::val] == 10100 && tally[Split::test] == 10100;
  const std::string decomposition =
      fmt::format("{}/{}/{}", tally[Split::train], tally[Split::val], tally[Split::test]);

  Rng rng(4242);
  std::size_t cap_violations = 0, partition_violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SampleRecord> rs;
    const std::size_t classes = 1 + rng.index(12);
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t n = 1 + rng.index(900);
      for (std::size_t i = 0; i < n; ++i)
        rs.push_back({fmt::format("/r/{}/{}.ppm", c, i), fmt::format("d{}", c), std::nullopt,
                      rng.index(2) ? Source::A : Source::B, Split::unassigned});
    }
    const auto balanced = balance_classes(Manifest(rs), 500, rng.next());
    for (auto s : balanced.class_sizes()) cap_violations += s > 500;
    const auto parts = split_dataset(balanced, {}, rng.next()).manifest;
    std::set<std::string> seen;
    for (auto sp : {Split::train, Split::val, Split::test}) {
      const auto part = filter_by_split(parts, sp);
      for (const auto& r : part.records()) {
        if (!seen.insert(r.image_path).second) ++partition_violations;
      }
    }
    if (seen.size() != balanced.size()) ++partition_violations;
  }
  ok = ok && cap_violations == 0 && partition_violations == 0;
  return {ok, fmt::format("101x1000 -> {}; cap violations {}, partition violations {}", decomposition,
                          cap_violations, partition_violations)};
}

}  // namespace

int main(int argc, char** argv) {
  // optional argument: run only criteria whose name contains it
  const std::string filter = argc > 1 ? argv[1] : "";
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"gradient integrity", 120, gradient_integrity},
      {"metric oracle equivalence", 30, metric_oracle},
      {"reference score arithmetic", 1, reference_score_arithmetic},
      {"SR factor rule", 1, sr_factor_rule},
      {"soft-threshold law", 10, soft_threshold_law},
      {"SR quality", 300, sr_quality},
      {"overfit sanity (inception, 500 iterations)", 300, [] { return overfit(Architecture::inception, 500); }},
      {"overfit sanity (vgg-style, 1000 iterations)", 300, [] { return overfit(Architecture::vgg_style, 1000); }},
      {"freeze semantics", 60, freeze_semantics},
      {"pipeline determinism", 900, pipeline_determinism},
      {"balancing and splitting", 60, balancing_splitting},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!filter.empty() && std::string_view(c.name).find(filter) == std::string_view::npos) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    fmt::print("{} {}: {} ({:.1f} s{})\n", pass ? "PASS" : "FAIL", c.name, o.detail, secs,
               in_time ? "" : fmt::format(", over the {:.0f} s budget", c.budget_s));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
