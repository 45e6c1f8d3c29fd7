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
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dietnet/dataset.hpp"
#include "dietnet/errors.hpp"
#include "dietnet/rng.hpp"

namespace dietnet {

std::string_view to_string(Source s) { return s == Source::A ? "A" : "B"; }

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

std::string_view to_string(DatasetVariant v) {
  switch (v) {
    case DatasetVariant::original: return "original";
    case DatasetVariant::b_super_resolved: return "b_super_resolved";
    case DatasetVariant::a_halved: return "a_halved";
  }
  return "original";
}

Source parse_source(std::string_view text) {
  if (text == "A") return Source::A;
  if (text == "B") return Source::B;
  throw ValidationError(fmt::format("unknown source '{}' (expected A or B)", text));
}

Split parse_split(std::string_view text) {
  for (auto s : {Split::train, Split::val, Split::test, Split::unassigned}) {
    if (text == to_string(s)) return s;
  }
  throw ValidationError(fmt::format("unknown split '{}'", text));
}

DatasetVariant parse_variant(std::string_view text) {
  for (auto v : {DatasetVariant::original, DatasetVariant::b_super_resolved, DatasetVariant::a_halved}) {
    if (text == to_string(v)) return v;
  }
  throw ValidationError(fmt::format("unknown dataset variant '{}' (original, b_super_resolved, a_halved)", text));
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

// Record indices grouped by class id.
std::vector<std::vector<std::size_t>> group_by_class(const Manifest& m) {
  std::vector<std::vector<std::size_t>> groups(m.class_count());
  for (std::size_t i = 0; i < m.size(); ++i) groups[m.class_of(i)].push_back(i);
  return groups;
}

Manifest keep_records(const Manifest& m, const std::vector<bool>& keep) {
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (keep[i]) out.push_back(m.records()[i]);
  }
  return Manifest(std::move(out), m.qualify_by_source());
}

}  // namespace

Manifest::Manifest(std::vector<SampleRecord> records, bool qualify_by_source)
    : records_(std::move(records)), qualify_(qualify_by_source) {
  std::unordered_map<std::string, std::size_t> seen_paths, class_lookup;
  class_ids_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.dish_label.empty()) throw ValidationError(fmt::format("record {} ('{}') has no dish label", i, r.image_path));
    if (r.image_path.empty()) throw ValidationError(fmt::format("record {} has no image path", i));
    if (auto [it, fresh] = seen_paths.emplace(r.image_path, i); !fresh) {
      throw ValidationError(fmt::format("duplicate image path '{}' (records {} and {})", r.image_path, it->second, i));
    }
    std::string key = qualify_ ? fmt::format("{}:{}", to_string(r.source), r.dish_label) : r.dish_label;
    auto [it, fresh] = class_lookup.emplace(key, class_names_.size());
    if (fresh) class_names_.push_back(std::move(key));
    class_ids_.push_back(it->second);
    if (r.category_label && !category_index_.count(*r.category_label)) {
      category_index_.emplace(*r.category_label, category_index_.size());
    }
  }
}

std::vector<std::size_t> Manifest::class_sizes() const {
  std::vector<std::size_t> sizes(class_count(), 0);
  for (auto c : class_ids_) ++sizes[c];
  return sizes;
}

// ---------------------------------------------------------------- TSV I/O

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  std::vector<SampleRecord> records;
  std::unordered_map<std::string, std::size_t> line_of_path;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() < 4 || f.size() > 5) {
      throw ValidationError(fmt::format("manifest line {}: expected 4 or 5 tab-separated fields, got {}", line_no, f.size()));
    }
    if (f[0].empty()) throw ValidationError(fmt::format("manifest line {}: missing image path", line_no));
    if (f[1].empty()) throw ValidationError(fmt::format("manifest line {}: missing dish label", line_no));
    SampleRecord r;
    std::filesystem::path p(f[0]);
    r.image_path = (p.is_relative() && !base_dir.empty() ? (base_dir / p).lexically_normal() : p).string();
    r.dish_label = f[1];
    if (!f[2].empty() && f[2] != "-") r.category_label = f[2];
    try {
      r.source = parse_source(f[3]);
      if (f.size() == 5 && !f[4].empty()) r.split = parse_split(f[4]);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("manifest line {}: {}", line_no, e.what()));
    }
    if (auto [it, fresh] = line_of_path.emplace(r.image_path, line_no); !fresh) {
      throw ValidationError(fmt::format("manifest line {}: duplicate image path '{}' (first seen on line {})", line_no,
                                        f[0], it->second));
    }
    records.push_back(std::move(r));
  }
  return Manifest(std::move(records));
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  try {
    return parse_manifest(buf.str(), std::filesystem::absolute(path).parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

namespace {

std::string format_records(const Manifest& m, const std::filesystem::path& relative_to) {
  std::string out = "# path\tdish\tcategory\tsource\tsplit\n";
  for (const auto& r : m.records()) {
    std::string path = r.image_path;
    if (!relative_to.empty() && std::filesystem::path(path).is_absolute()) {
      const auto rel = std::filesystem::path(path).lexically_relative(relative_to);
      if (!rel.empty()) path = rel.string();
    }
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", path, r.dish_label, r.category_label.value_or("-"), to_string(r.source),
                       to_string(r.split));
  }
  return out;
}

}  // namespace

std::string format_manifest(const Manifest& manifest) { return format_records(manifest, {}); }

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  const auto dir = std::filesystem::absolute(path).parent_path();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write manifest " + path.string());
  f << format_records(manifest, dir);
  if (!f) throw IoError("failed writing manifest " + path.string());
}

// ---------------------------------------------------------------- transforms

Manifest filter_min_images(const Manifest& manifest, std::size_t threshold) {
  if (threshold == 0) throw ContractError("filter_min_images: threshold must be >= 1");
  const auto sizes = manifest.class_sizes();
  std::vector<bool> keep(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) keep[i] = sizes[manifest.class_of(i)] >= threshold;
  return keep_records(manifest, keep);
}

Manifest merge_datasets(const Manifest& a, const Manifest& b) {
  std::vector<SampleRecord> out;
  out.reserve(a.size() + b.size());
  for (auto r : a.records()) {
    r.source = Source::A;
    out.push_back(std::move(r));
  }
  for (auto r : b.records()) {
    r.source = Source::B;
    out.push_back(std::move(r));
  }
  return Manifest(std::move(out));
}

Manifest filter_by_source(const Manifest& manifest, Source source) {
  std::vector<bool> keep(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) keep[i] = manifest.records()[i].source == source;
  return keep_records(manifest, keep);
}

Manifest filter_by_split(const Manifest& manifest, Split split) {
  std::vector<bool> keep(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) keep[i] = manifest.records()[i].split == split;
  return keep_records(manifest, keep);
}

Manifest balance_classes(const Manifest& manifest, std::size_t cap, std::uint64_t seed) {
  if (cap == 0) throw ContractError("balance_classes: cap must be >= 1");
  std::vector<bool> keep(manifest.size(), true);
  const auto groups = group_by_class(manifest);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto idx = groups[c];
    if (idx.size() <= cap) continue;
    Rng rng = Rng::derive(seed, {fnv1a(manifest.class_name(c)), 0xba1a});
    for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    for (std::size_t i = cap; i < idx.size(); ++i) keep[idx[i]] = false;
  }
  return keep_records(manifest, keep);
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double raw = static_cast<double>(n) * r[i];
    counts[i] = static_cast<std::size_t>(std::floor(raw + 1e-9));
    frac[i] = raw - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

SplitOutcome split_dataset(const Manifest& manifest, const SplitRatios& ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(fmt::format("split ratios ({}, {}, {}) must be non-negative and sum to 1", ratios.train,
                                      ratios.val, ratios.test));
  }
  SplitOutcome outcome;
  std::vector<SampleRecord> records = manifest.records();
  const auto groups = group_by_class(manifest);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto idx = groups[c];
    if (idx.size() < 3) {
      outcome.warnings.push_back(
          fmt::format("class '{}' has only {} image(s); all assigned to train", manifest.class_name(c), idx.size()));
      for (auto i : idx) records[i].split = Split::train;
      continue;
    }
    Rng rng = Rng::derive(seed, {fnv1a(manifest.class_name(c)), 0x5917});
    rng.shuffle(std::span<std::size_t>(idx));
    const auto counts = split_counts(idx.size(), ratios);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      records[idx[k]].split = k < counts[0] ? Split::train : (k < counts[0] + counts[1] ? Split::val : Split::test);
    }
  }
  outcome.manifest = Manifest(std::move(records), manifest.qualify_by_source());
  return outcome;
}

CategoryView to_category_manifest(const Manifest& manifest) {
  CategoryView view;
  std::vector<SampleRecord> out;
  for (const auto& r : manifest.records()) {
    if (!r.category_label) {
      ++view.dropped;
      continue;
    }
    SampleRecord c = r;
    c.dish_label = *r.category_label;
    out.push_back(std::move(c));
  }
  view.manifest = Manifest(std::move(out), false);
  return view;
}

}  // namespace dietnet
