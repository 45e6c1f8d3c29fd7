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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dietnet/image.hpp"

namespace dietnet {

class ScnBank;

enum class Source { A, B };
enum class Split { train, val, test, unassigned };
enum class DatasetVariant { original, b_super_resolved, a_halved };

std::string_view to_string(Source s);
std::string_view to_string(Split s);
std::string_view to_string(DatasetVariant v);
// Throw ValidationError on unknown names.
Source parse_source(std::string_view text);
Split parse_split(std::string_view text);
DatasetVariant parse_variant(std::string_view text);

struct SampleRecord {
  std::string image_path;
  std::string dish_label;
  std::optional<std::string> category_label;
  Source source = Source::A;
  Split split = Split::unassigned;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Immutable list of records with contiguous class ids in first-appearance
/// order. With `qualify_by_source` (the default) a class is the pair
/// (source, dish), so identically named dishes from the two sets stay apart.
class Manifest {
 public:
  Manifest() = default;
  /// Throws ValidationError on duplicate paths or empty dish labels.
  explicit Manifest(std::vector<SampleRecord> records, bool qualify_by_source = true);

  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  bool qualify_by_source() const noexcept { return qualify_; }

  std::size_t class_count() const noexcept { return class_names_.size(); }
  /// Class id of record i.
  std::size_t class_of(std::size_t i) const { return class_ids_.at(i); }
  const std::vector<std::size_t>& class_ids() const noexcept { return class_ids_; }
  /// Display name, "A:dish" when qualified by source.
  const std::string& class_name(std::size_t id) const { return class_names_.at(id); }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  /// Records per class id.
  std::vector<std::size_t> class_sizes() const;

  const std::map<std::string, std::size_t>& category_index() const noexcept { return category_index_; }

  friend bool operator==(const Manifest& a, const Manifest& b) {
    return a.records_ == b.records_ && a.qualify_ == b.qualify_;
  }

 private:
  std::vector<SampleRecord> records_;
  bool qualify_ = true;
  std::vector<std::size_t> class_ids_;
  std::vector<std::string> class_names_;
  std::map<std::string, std::size_t> category_index_;
};

// Tab-separated: path, dish, category ("-" or empty for none), source, and an
// optional split column. Blank lines and lines starting with '#' are skipped.
// Relative paths are resolved against `base_dir`.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
/// Throws IoError if the file is missing, ValidationError naming the line on bad content.
Manifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const Manifest& manifest);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Drops classes with fewer than `threshold` records.
Manifest filter_min_images(const Manifest& manifest, std::size_t threshold);
/// Records of `a` tagged source A followed by those of `b` tagged source B.
Manifest merge_datasets(const Manifest& a, const Manifest& b);
Manifest filter_by_source(const Manifest& manifest, Source source);
Manifest filter_by_split(const Manifest& manifest, Split split);

/// Keeps at most `cap` records per class, sampled without replacement by a
/// seeded generator keyed on the class; surviving records keep their order.
Manifest balance_classes(const Manifest& manifest, std::size_t cap, std::uint64_t seed);

struct SplitRatios {
  double train = 0.8, val = 0.1, test = 0.1;
};

struct SplitOutcome {
  Manifest manifest;
  std::vector<std::string> warnings;
};

/// Stratified per class: each class is shuffled with a seeded generator and
/// cut by the ratios using largest-remainder rounding. Classes with fewer than
/// three records go entirely to train (with a warning).
SplitOutcome split_dataset(const Manifest& manifest, const SplitRatios& ratios, std::uint64_t seed);

/// Split counts of the largest-remainder rule for one class of size n.
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& ratios);

/// Relabels by category (records without one are dropped and counted).
struct CategoryView {
  Manifest manifest;
  std::size_t dropped = 0;
};
CategoryView to_category_manifest(const Manifest& manifest);

struct VariantOptions {
  std::filesystem::path source_root;  // records are mirrored relative to this
  std::filesystem::path out_root;     // default: <source_root>_<variant>
  std::size_t target = 256;           // SR lifts until min(w, h) >= target
};

struct VariantResult {
  Manifest manifest;  // paths point at the materialised files
  std::vector<std::string> errors;
  std::size_t written = 0;
};

/// original leaves everything untouched; a_halved halves every source-A
/// image; b_super_resolved lifts source-B images smaller than the target.
/// Unreadable files are reported in `errors` and the run continues.
VariantResult apply_variant(const Manifest& manifest, DatasetVariant variant, const ScnBank* bank,
                            const VariantOptions& options);

struct CategoryCount {
  std::string category;
  std::size_t dishes = 0;
  std::size_t images = 0;
  double percent = 0.0;
};

struct DatasetStats {
  std::size_t total = 0;
  std::vector<CategoryCount> categories;
  std::vector<std::pair<std::string, std::size_t>> class_counts;
  std::vector<std::pair<ImageSize, Source>> dimensions;
};

/// Counts per category and class; dimensions are read from the file headers
/// when `read_dimensions` is set.
DatasetStats dataset_stats(const Manifest& manifest, bool read_dimensions = true);
std::string stats_csv(const DatasetStats& stats);
/// Width/height scatter, one colour per source.
std::string dimensions_svg(const DatasetStats& stats, const std::string& title);

}  // namespace dietnet
