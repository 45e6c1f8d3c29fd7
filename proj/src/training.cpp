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
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "dietnet/errors.hpp"
#include "dietnet/experiment.hpp"
#include "dietnet/rng.hpp"
#include "parallel.hpp"

namespace dietnet {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError(fmt::format("learning rate must be positive, got {}", learning_rate));
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError(fmt::format("momentum {} outside [0, 1)", momentum));
  if (batch_size == 0) throw ValidationError("batch size must be at least 1");
  if (validation_interval == 0) throw ValidationError("validation interval must be at least 1");
  if (!(aux_discount >= 0.0)) throw ValidationError(fmt::format("aux discount must be non-negative, got {}", aux_discount));
}

double scheduled_learning_rate(const TrainConfig& config, std::size_t iteration) {
  const std::size_t step = std::max<std::size_t>(1, (config.max_iterations + 2) / 3);
  return config.learning_rate * std::pow(0.1, static_cast<double>(iteration / step));
}

SampleSet load_samples(const Manifest& manifest, Split split, const SampleOptions& options) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (split == Split::unassigned || manifest.records()[i].split == split) picked.push_back(i);
  }
  SampleSet set;
  set.num_classes = manifest.class_count();
  set.images.resize(picked.size());
  detail::parallel_for(picked.size(), [&](std::size_t k) {
    set.images[k] = unify_resolution(read_pnm(manifest.records()[picked[k]].image_path), options.resize);
  });
  for (auto i : picked) {
    set.labels.push_back(manifest.class_of(i));
    set.sources.push_back(manifest.records()[i].source);
  }
  return set;
}

SampleSet make_sample_set(const std::vector<LabeledImage>& images, std::size_t num_classes,
                          const SampleOptions& options) {
  SampleSet set;
  set.num_classes = num_classes;
  for (const auto& li : images) {
    if (li.label >= num_classes) throw ContractError(fmt::format("label {} outside [0, {})", li.label, num_classes));
    set.images.push_back(unify_resolution(li.image, options.resize));
    set.labels.push_back(li.label);
    set.sources.push_back(Source::A);
  }
  return set;
}

namespace {

std::vector<std::size_t> rank_logits(const Tensor& logits) {
  std::vector<std::size_t> ids(logits.numel());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  return ids;
}

double validation_at1(const Model& model, const SampleSet& set, const SampleOptions& options) {
  return accuracy_top_k(predict_log(model, set, options), 1);
}

}  // namespace

TrainResult train(Model& model, const SampleSet& train_set, const SampleSet& validation_set, const TrainConfig& config,
                  const SampleOptions& options) {
  config.validate();
  if (train_set.num_classes != model.spec().num_classes) {
    throw ContractError(fmt::format("model has {} classes, training set {}", model.spec().num_classes,
                                    train_set.num_classes));
  }
  if (train_set.empty() && config.max_iterations > 0) throw ContractError("training set is empty");
  const SampleSet& val = validation_set.empty() ? train_set : validation_set;
  model.apply_freeze_mode(config.freeze_mode);
  auto params = model.parameters();

  TrainResult result;
  std::vector<Tensor> best;
  auto measure = [&](std::size_t iteration) {
    if (val.empty()) return;
    const double at1 = validation_at1(model, val, options);
    result.validation_trace.emplace_back(iteration, at1);
    if (result.validation_trace.size() == 1 || at1 > result.best_validation_at1) {
      result.best_validation_at1 = at1;
      result.best_iteration = iteration;
      best.clear();
      for (const auto& p : params) best.push_back(p.tensor);
    }
  };
  measure(0);

  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  SgdState state;
  const std::size_t batch = config.batch_size;
  std::vector<Tensor> inputs(batch);
  std::vector<std::size_t> labels(batch);
  std::vector<double> losses(batch);

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      inputs[b] = prepare_train_sample(train_set.images[idx], options, rng);
      labels[b] = train_set.labels[idx];
    }
    std::vector<Graph> graphs(batch);
    detail::parallel_for(batch, [&](std::size_t b) {
      Graph& g = graphs[b];
      const auto out = model.forward(g, g.constant(inputs[b]), true);
      std::vector<NodeId> aux;
      for (auto a : out.aux_logits) aux.push_back(g.softmax_cross_entropy(a, labels[b]));
      const NodeId loss = total_loss(g, g.softmax_cross_entropy(out.logits, labels[b]), aux, config.aux_discount);
      losses[b] = g.value(loss)[0];
      g.backward(g.scale(loss, 1.0 / static_cast<double>(batch)));
    });
    const double mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(batch);
    if (!std::isfinite(mean_loss)) {
      throw NumericError(fmt::format("training loss became non-finite at iteration {}", it + 1));
    }
    result.loss_trace.push_back(mean_loss);
    zero_grads(params);
    for (const auto& g : graphs) g.accumulate_into(params);
    sgd_step(params, scheduled_learning_rate(config, it), config.momentum, state);
    if ((it + 1) % config.validation_interval == 0 || it + 1 == config.max_iterations) measure(it + 1);
  }

  if (!best.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].tensor = best[i];
  }
  for (auto& p : params) p.tensor.clear_grad();
  return result;
}

PredictionLog predict_log(const Model& model, const SampleSet& samples, const SampleOptions& options) {
  PredictionLog log;
  log.num_classes = model.spec().num_classes;
  log.entries.resize(samples.size());
  detail::parallel_for(samples.size(), [&](std::size_t i) {
    log.entries[i] = {samples.labels[i], rank_logits(model.predict(prepare_eval_sample(samples.images[i], options)))};
  });
  return log;
}

bool in_scope(Source source, std::string_view scope) {
  if (scope == "A,B") return true;
  if (scope == "A") return source == Source::A;
  if (scope == "B") return source == Source::B;
  throw ContractError(fmt::format("unknown evaluation scope \"{}\"", scope));
}

MetricsReport evaluate(const Model& model, const SampleSet& test_set, std::string_view scope,
                       const SampleOptions& options) {
  if (test_set.num_classes != model.spec().num_classes) {
    throw ContractError(fmt::format("model has {} classes, test set {}", model.spec().num_classes, test_set.num_classes));
  }
  SampleSet picked;
  picked.num_classes = test_set.num_classes;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    if (!in_scope(test_set.sources[i], scope)) continue;
    picked.images.push_back(test_set.images[i]);
    picked.labels.push_back(test_set.labels[i]);
    picked.sources.push_back(test_set.sources[i]);
  }
  if (picked.empty()) throw ContractError(fmt::format("scope \"{}\" has no test records", scope));
  return compute_metrics(predict_log(model, picked, options));
}

MetricsReport evaluate(const Model& model, const Manifest& manifest, std::string_view scope,
                       const SampleOptions& options) {
  std::vector<SampleRecord> kept;
  for (const auto& r : manifest.records()) {
    if (r.split == Split::test && in_scope(r.source, scope)) kept.push_back(r);
  }
  if (kept.empty()) throw ContractError(fmt::format("scope \"{}\" has no test records", scope));
  // class ids must follow the full manifest, so load through it
  auto set = load_samples(manifest, Split::test, options);
  return evaluate(model, set, scope, options);
}

Model build_model(Architecture arch, std::size_t num_classes, std::size_t crop, std::uint64_t seed,
                  double aux_discount) {
  if (arch == Architecture::inception) return Model(toy_inception_spec(num_classes, {3, crop, crop}, aux_discount), seed);
  const std::array<std::size_t, 2> depths{1, 2}, channels{16, 32};
  return build_vgg_style_net(depths, channels, num_classes, {3, crop, crop}, seed, 64);
}

}  // namespace dietnet
