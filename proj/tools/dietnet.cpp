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

#include <CLI11.hpp>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "dietnet/checkpoint.hpp"
#include "dietnet/errors.hpp"
#include "dietnet/experiment.hpp"
#include "dietnet/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dietnet;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kIo = 2, kNumeric = 3 };

struct Settings {
  std::string manifest;
  std::string variant = "original";
  bool balanced = false;
  std::size_t cap = 500;
  std::uint64_t seed = 42;
  std::string arch = "G";
  std::string freeze = "all_layers";
  std::string out = "out";
  std::string pretrained;
  std::string config;
  std::string bank;
  std::string model_dir;
  std::string input;
  std::string output;
  std::vector<std::string> results;
  // training
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t iterations = 300;
  std::size_t validation_interval = 50;
  double aux_discount = 0.3;
  // samples and variants
  std::size_t resize = 32;
  std::size_t crop = 28;
  std::size_t sr_target = 32;
  std::string source_root;
  double train_ratio = 0.8, val_ratio = 0.1, test_ratio = 0.1;
  // super-resolution
  std::vector<std::size_t> factors;
  std::size_t sr_epochs = 5;
  std::size_t sr_patches = 64;
  double sr_lr = 2e-3;
  // synthetic data
  std::size_t classes_a = 4, classes_b = 4, per_class = 24, categories = 4;
};

template <class T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

// Keys in the config file win over command-line flags.
void apply_config(Settings& s) {
  if (s.config.empty()) return;
  std::ifstream f(s.config);
  if (!f) throw IoError("cannot open config " + s.config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("config {}: {}", s.config, e.what()));
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::vector<std::string> known{
      "manifest", "variant", "balanced", "cap", "seed", "arch", "freeze", "out", "pretrained", "bank",
      "learning_rate", "momentum", "batch_size", "iterations", "validation_interval", "aux_discount", "resize",
      "crop", "sr_target", "source_root", "train_ratio", "val_ratio", "test_ratio", "factors", "sr_epochs",
      "sr_patches", "sr_lr", "classes_a", "classes_b", "per_class", "categories"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError(fmt::format("config {}: unknown key \"{}\"", s.config, key));
    }
  }
  try {
    take(j, "manifest", s.manifest);
    take(j, "variant", s.variant);
    take(j, "balanced", s.balanced);
    take(j, "cap", s.cap);
    take(j, "seed", s.seed);
    take(j, "arch", s.arch);
    take(j, "freeze", s.freeze);
    take(j, "out", s.out);
    take(j, "pretrained", s.pretrained);
    take(j, "bank", s.bank);
    take(j, "learning_rate", s.learning_rate);
    take(j, "momentum", s.momentum);
    take(j, "batch_size", s.batch_size);
    take(j, "iterations", s.iterations);
    take(j, "validation_interval", s.validation_interval);
    take(j, "aux_discount", s.aux_discount);
    take(j, "resize", s.resize);
    take(j, "crop", s.crop);
    take(j, "sr_target", s.sr_target);
    take(j, "source_root", s.source_root);
    take(j, "train_ratio", s.train_ratio);
    take(j, "val_ratio", s.val_ratio);
    take(j, "test_ratio", s.test_ratio);
    take(j, "factors", s.factors);
    take(j, "sr_epochs", s.sr_epochs);
    take(j, "sr_patches", s.sr_patches);
    take(j, "sr_lr", s.sr_lr);
    take(j, "classes_a", s.classes_a);
    take(j, "classes_b", s.classes_b);
    take(j, "per_class", s.per_class);
    take(j, "categories", s.categories);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("config {}: {}", s.config, e.what()));
  }
}

Manifest require_manifest(const Settings& s) {
  if (s.manifest.empty()) throw ValidationError("--manifest is required");
  return load_manifest(s.manifest);
}

TrainConfig train_config(const Settings& s) {
  TrainConfig c;
  c.learning_rate = s.learning_rate;
  c.momentum = s.momentum;
  c.batch_size = s.batch_size;
  c.max_iterations = s.iterations;
  c.validation_interval = s.validation_interval;
  c.seed = s.seed;
  c.freeze_mode = parse_freeze_mode(s.freeze);
  c.aux_discount = s.aux_discount;
  c.validate();
  return c;
}

ExperimentOptions experiment_options(const Settings& s) {
  ExperimentOptions o;
  o.sample = SampleOptions{s.resize, s.crop, {0.0, 0.0, 0.0}};
  if (s.crop > s.resize) throw ValidationError(fmt::format("crop {} exceeds resize {}", s.crop, s.resize));
  o.train = train_config(s);
  o.ratios = {s.train_ratio, s.val_ratio, s.test_ratio};
  o.cap = s.cap;
  o.sr_target = s.sr_target;
  o.source_root = s.source_root;
  o.work_dir = fs::path(s.out) / "variants";
  o.sr_train.learning_rate = s.sr_lr;
  o.sr_train.seed = s.seed;
  o.sr_epochs = s.sr_epochs;
  o.sr_patches_per_image = s.sr_patches;
  if (!s.pretrained.empty()) o.pretrained = s.pretrained;
  return o;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string loss_csv(const TrainResult& r) {
  std::string out = "iteration,loss\n";
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i) out += fmt::format("{},{}\n", i + 1, r.loss_trace[i]);
  return out;
}

std::string validation_csv(const TrainResult& r) {
  std::string out = "iteration,at1\n";
  for (const auto& [it, at1] : r.validation_trace) out += fmt::format("{},{}\n", it, at1);
  return out;
}

void print_metrics(const std::string& label, const MetricsReport& m) {
  fmt::print("{:<10} AT1 {:6.2f}  AT{} {:6.2f}  NAT1 {:6.2f}\n", label, 100 * m.at1, m.top_k_used, 100 * m.at5,
             100 * m.nat1);
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) fmt::print(stderr, "warning: {}\n", w);
}

std::optional<ScnBank> maybe_bank(const Settings& s) {
  if (s.bank.empty()) return std::nullopt;
  return ScnBank::load(s.bank);
}

// Per-patch PSNR on [0, 1] data.
double mse_psnr(double mse) { return mse > 0.0 ? 10.0 * std::log10(1.0 / mse) : INFINITY; }

// ---- subcommands ----------------------------------------------------------

int cmd_synth(const Settings& s) {
  SyntheticOptions o;
  o.classes_a = s.classes_a;
  o.classes_b = s.classes_b;
  o.per_class = s.per_class;
  o.categories = s.categories;
  o.seed = s.seed;
  const auto m = generate_synthetic_dataset(s.out, o);
  fmt::print("wrote {} images in {} classes; manifest {}\n", m.size(), m.class_count(),
             (fs::path(s.out) / "manifest.tsv").string());
  return kOk;
}

int cmd_stats(const Settings& s) {
  const auto m = require_manifest(s);
  const auto st = dataset_stats(m);
  write_text(fs::path(s.out) / "stats.csv", stats_csv(st));
  write_text(fs::path(s.out) / "dims.svg", dimensions_svg(st, "Image dimensions"));
  fmt::print("{} images, {} classes\n", st.total, m.class_count());
  for (const auto& c : st.categories) fmt::print("  {:<24} {:>4} dishes {:>7} images {:6.2f}%\n", c.category, c.dishes, c.images, c.percent);
  return kOk;
}

int cmd_sr_train(const Settings& s) {
  const auto m = require_manifest(s);
  ScnTrainOptions opt;
  opt.learning_rate = s.sr_lr;
  opt.seed = s.seed;
  ScnBank bank;
  if (s.factors.empty()) {
    bank = train_sr_bank(m, s.sr_target, opt, s.sr_epochs, s.sr_patches);
  } else {
    std::vector<RasterImage> images;
    for (const auto& r : m.records())
      if (r.source == Source::A && r.split != Split::test && r.split != Split::val) images.push_back(read_pnm(r.image_path));
    for (auto f : s.factors) {
      const auto pairs = make_patch_pairs(images, f, opt.config.patch_size, s.sr_patches, s.seed + f);
      if (pairs.empty()) throw ValidationError(fmt::format("no image is large enough for factor {}", f));
      bank.add(train_scn(pairs, f, s.sr_epochs, opt).params);
    }
  }
  bank.save(s.out);
  // held-out quality on source-A test images when present
  std::vector<RasterImage> held;
  for (const auto& r : m.records())
    if (r.source == Source::A && r.split == Split::test) held.push_back(read_pnm(r.image_path));
  for (auto f : bank.factors()) {
    fmt::print("factor {} saved to {}\n", f, (fs::path(s.out) / fmt::format("scn_x{}.dnt", f)).string());
    if (held.empty()) continue;
    const auto pairs = make_patch_pairs(held, f, bank.at(f).patch_size, s.sr_patches, s.seed + 1000 + f);
    if (pairs.empty()) continue;
    fmt::print("  held-out PSNR: SCN {:.2f} dB, bicubic {:.2f} dB\n", mse_psnr(scn_loss(pairs, bank.at(f))),
               mse_psnr(bicubic_loss(pairs, bank.at(f).patch_size, f)));
  }
  return kOk;
}

int cmd_sr_apply(const Settings& s) {
  if (s.input.empty() || s.output.empty()) throw ValidationError("--input and --output are required");
  const auto bank = maybe_bank(s);
  if (!bank) throw ValidationError("--bank is required");
  const auto img = read_pnm(s.input);
  RasterImage out;
  if (s.factors.size() == 1) {
    out = super_resolve(img, s.factors.front(), bank->at(s.factors.front()));
  } else {
    out = lift_to_target(img, *bank, s.sr_target);
  }
  write_pnm(s.output, out);
  fmt::print("{}x{} -> {}x{}\n", img.width, img.height, out.width, out.height);
  return kOk;
}

int cmd_variant(const Settings& s) {
  const auto m = require_manifest(s);
  const auto variant = parse_variant(s.variant);
  const auto bank = maybe_bank(s);
  VariantOptions vo;
  vo.source_root = s.source_root;
  vo.out_root = fs::path(s.out) / std::string(to_string(variant));
  vo.target = s.sr_target;
  const auto r = apply_variant(m, variant, bank ? &*bank : nullptr, vo);
  warn_all(r.errors);
  save_manifest(fs::path(s.out) / "manifest.tsv", r.manifest);
  fmt::print("{} records, {} images written, {} errors\n", r.manifest.size(), r.written, r.errors.size());
  return kOk;
}

int cmd_train(const Settings& s) {
  auto m = require_manifest(s);
  const auto opts = experiment_options(s);
  if (s.balanced) m = balance_classes(m, s.cap, s.seed);
  bool assigned = true;
  for (const auto& r : m.records()) assigned = assigned && r.split != Split::unassigned;
  if (!assigned) {
    auto sp = split_dataset(m, opts.ratios, s.seed);
    warn_all(sp.warnings);
    m = std::move(sp.manifest);
  }
  auto sample = opts.sample;
  const auto train_set = load_samples(m, Split::train, sample);
  const auto val_set = load_samples(m, Split::val, sample);
  sample.mean = channel_means(train_set.images);
  auto model = build_model(parse_architecture(s.arch), m.class_count(), sample.crop, s.seed, s.aux_discount);
  if (opts.pretrained) fmt::print("loaded {} tensors from {}\n", model.load_matching(load_checkpoint(*opts.pretrained)), opts.pretrained->string());
  const auto r = train(model, train_set, val_set, opts.train, sample);
  const fs::path out(s.out);
  fs::create_directories(out);
  save_checkpoint(out / "model.dnt", model.parameters());
  write_text(out / "model.txt", format_model_spec(model.spec()));
  write_text(out / "mean.txt", fmt::format("{} {} {}\n", sample.mean[0], sample.mean[1], sample.mean[2]));
  write_text(out / "loss.csv", loss_csv(r));
  write_text(out / "validation.csv", validation_csv(r));
  save_manifest(out / "manifest.tsv", m);
  fmt::print("best iteration {} (validation AT1 {:.2f}%), model saved to {}\n", r.best_iteration,
             100 * r.best_validation_at1, out.string());
  return kOk;
}

int cmd_eval(const Settings& s) {
  if (s.model_dir.empty()) throw ValidationError("--model is required");
  const fs::path dir(s.model_dir);
  const auto m = s.manifest.empty() ? load_manifest(dir / "manifest.tsv") : require_manifest(s);
  Model model(parse_model_spec(read_text(dir / "model.txt")), 0);
  model.load_matching(load_checkpoint(dir / "model.dnt"));
  SampleOptions sample{s.resize, model.spec().input_shape[1], {0.0, 0.0, 0.0}};
  std::istringstream mean(read_text(dir / "mean.txt"));
  mean >> sample.mean[0] >> sample.mean[1] >> sample.mean[2];
  const auto test = load_samples(m, Split::test, sample);
  for (const char* scope : {"A,B", "B"}) {
    bool any = false;
    for (auto src : test.sources) any = any || in_scope(src, scope);
    if (!any) {
      fmt::print(stderr, "warning: scope {} has no test records\n", scope);
      continue;
    }
    const auto metrics = evaluate(model, test, scope, sample);
    print_metrics(scope, metrics);
    const std::string tag = std::string(scope) == "A,B" ? "AB" : scope;
    write_text(fs::path(s.out) / fmt::format("cm_{}.csv", tag), confusion_csv(metrics.confusion, m.class_names()));
  }
  return kOk;
}

void write_traces(const fs::path& dir, const std::string& run, const TrainResult& r) {
  write_text(dir / fmt::format("loss_{}.csv", run), loss_csv(r));
  write_text(dir / fmt::format("validation_{}.csv", run), validation_csv(r));
}

int cmd_matrix(const Settings& s) {
  const auto m = require_manifest(s);
  const auto opts = experiment_options(s);
  const auto bank = maybe_bank(s);
  const auto outcomes = run_matrix(m, opts, bank ? &*bank : nullptr);
  std::vector<RunResult> runs;
  std::map<std::string, DatasetStats> dims;
  for (const auto& o : outcomes) {
    const std::string v(to_string(o.result.variant));
    if (!dims.count(v)) dims[v] = dataset_stats(o.manifest);
    warn_all(o.warnings);
    runs.push_back(o.result);
    write_traces(s.out, o.result.run, o.training);
    for (const auto& sc : o.result.scopes) print_metrics(fmt::format("{} {}", o.result.run, sc.scope), sc.metrics);
  }
  const auto report = emit_report(runs, s.out, dims);
  warn_all(report.warnings);
  fmt::print("report written to {}\n", s.out);
  return kOk;
}

int cmd_category(const Settings& s, bool both) {
  const auto m = require_manifest(s);
  const auto opts = experiment_options(s);
  std::vector<FreezeMode> modes{parse_freeze_mode(s.freeze)};
  if (both) modes = {FreezeMode::all_layers, FreezeMode::last_fc_only};
  std::vector<RunResult> runs;
  for (auto mode : modes) {
    const auto o = run_category_experiment(mode, m, opts);
    if (o.excluded) fmt::print(stderr, "warning: {} records without a category label were excluded\n", o.excluded);
    runs.push_back(o.result);
    write_traces(s.out, o.result.run, o.training);
    print_metrics(std::string(to_string(mode)), o.result.scopes.front().metrics);
    fmt::print("  train AT1 {:.2f}%, best iteration {}\n", 100 * o.train_at1, o.result.best_iteration);
  }
  const auto report = emit_report(runs, s.out);
  warn_all(report.warnings);
  return kOk;
}

int cmd_report(const Settings& s) {
  if (s.results.empty()) throw ValidationError("at least one --results file is required");
  std::vector<RunResult> runs;
  for (const auto& path : s.results) {
    const auto part = runs_from_rows(parse_results_csv(read_text(path)));
    runs.insert(runs.end(), part.begin(), part.end());
  }
  const auto report = emit_report(runs, s.out);
  warn_all(report.warnings);
  std::cout << read_text(fs::path(s.out) / "results.md");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dish and food-category recognition experiments"};
  app.require_subcommand(1);
  Settings s;

  auto common = [&](CLI::App* c) {
    c->add_option("--config", s.config, "JSON file whose keys override the flags");
    c->add_option("--out", s.out, "output directory");
    c->add_option("--seed", s.seed, "random seed");
  };
  auto data = [&](CLI::App* c) {
    c->add_option("--manifest", s.manifest, "manifest TSV");
    c->add_option("--source-root", s.source_root, "root mirrored into variant directories");
    c->add_option("--sr-target", s.sr_target, "minimum side reached by super-resolution");
  };
  auto training = [&](CLI::App* c) {
    c->add_option("--arch", s.arch, "G (inception) or V (vgg-style)");
    c->add_option("--freeze", s.freeze, "all_layers or last_fc_only");
    c->add_option("--pretrained", s.pretrained, "checkpoint to start from");
    c->add_option("--balanced", s.balanced, "cap images per class")->default_val(false);
    c->add_option("--cap", s.cap, "images per class when balanced");
    c->add_option("--lr", s.learning_rate, "initial learning rate");
    c->add_option("--momentum", s.momentum, "SGD momentum");
    c->add_option("--batch", s.batch_size, "mini-batch size");
    c->add_option("--iterations", s.iterations, "training iterations");
    c->add_option("--interval", s.validation_interval, "iterations between validations");
    c->add_option("--aux-discount", s.aux_discount, "weight of auxiliary losses");
    c->add_option("--resize", s.resize, "unified image side");
    c->add_option("--crop", s.crop, "crop side fed to the network");
    c->add_option("--bank", s.bank, "directory of super-resolution parameters");
    c->add_option("--sr-epochs", s.sr_epochs, "epochs when a bank has to be trained");
  };

  auto* synth = app.add_subcommand("synth", "generate the synthetic mini-dataset");
  common(synth);
  synth->add_option("--classes-a", s.classes_a);
  synth->add_option("--classes-b", s.classes_b);
  synth->add_option("--per-class", s.per_class);
  synth->add_option("--categories", s.categories);

  auto* stats = app.add_subcommand("stats", "dataset statistics and dimension plot");
  common(stats);
  data(stats);

  auto* sr_train = app.add_subcommand("sr-train", "train super-resolution parameters");
  common(sr_train);
  data(sr_train);
  sr_train->add_option("--factors", s.factors, "upscale factors (default: those the manifest needs)")->delimiter(',');
  sr_train->add_option("--epochs", s.sr_epochs);
  sr_train->add_option("--patches", s.sr_patches, "patch pairs per image");
  sr_train->add_option("--lr", s.sr_lr);

  auto* sr_apply = app.add_subcommand("sr-apply", "super-resolve one image");
  common(sr_apply);
  sr_apply->add_option("--bank", s.bank)->required();
  sr_apply->add_option("--input", s.input)->required();
  sr_apply->add_option("--output", s.output)->required();
  sr_apply->add_option("--factor", s.factors, "single factor (default: lift to --sr-target)");
  sr_apply->add_option("--sr-target", s.sr_target);

  auto* variant = app.add_subcommand("variant", "materialise a dataset variant");
  common(variant);
  data(variant);
  variant->add_option("--variant", s.variant, "original, b_super_resolved or a_halved");
  variant->add_option("--bank", s.bank);

  auto* train_cmd = app.add_subcommand("train", "train one dish classifier");
  common(train_cmd);
  data(train_cmd);
  training(train_cmd);

  auto* eval = app.add_subcommand("eval", "evaluate a trained classifier");
  common(eval);
  data(eval);
  eval->add_option("--model", s.model_dir, "directory written by train")->required();
  eval->add_option("--resize", s.resize);

  auto* matrix = app.add_subcommand("matrix", "run the six dish experiments");
  common(matrix);
  data(matrix);
  training(matrix);

  auto* category = app.add_subcommand("category", "category recognition, both fine-tune modes");
  common(category);
  data(category);
  training(category);
  bool one_mode = false;
  category->add_flag("--single", one_mode, "run only the --freeze mode");

  auto* report = app.add_subcommand("report", "rebuild the report from results.csv files");
  common(report);
  report->add_option("--results", s.results, "results.csv files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    apply_config(s);
    if (synth->parsed()) return cmd_synth(s);
    if (stats->parsed()) return cmd_stats(s);
    if (sr_train->parsed()) return cmd_sr_train(s);
    if (sr_apply->parsed()) return cmd_sr_apply(s);
    if (variant->parsed()) return cmd_variant(s);
    if (train_cmd->parsed()) return cmd_train(s);
    if (eval->parsed()) return cmd_eval(s);
    if (matrix->parsed()) return cmd_matrix(s);
    if (category->parsed()) return cmd_category(s, !one_mode);
    if (report->parsed()) return cmd_report(s);
  } catch (const NumericError& e) {
    fmt::print(stderr, "numeric failure: {}\n", e.what());
    return kNumeric;
  } catch (const IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kIo;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return kValidation;
  } catch (const ContractError& e) {
    fmt::print(stderr, "invalid request: {}\n", e.what());
    return kValidation;
  } catch (const DimensionError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return kValidation;
  }
  return kOk;
}
