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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <fmt/format.h>

#include "dietnet/dataset.hpp"
#include "dietnet/errors.hpp"
#include "dietnet/rng.hpp"
#include "dietnet/samples.hpp"
#include "dietnet/super_resolution.hpp"
#include "dietnet/synthetic.hpp"

using namespace dietnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dietnet_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

// In-memory manifest with the given class sizes (no files behind it).
Manifest sized_manifest(const std::vector<std::size_t>& sizes, Source source = Source::A, const std::string& prefix = "d") {
  std::vector<SampleRecord> records;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      records.push_back({fmt::format("/{}/{}/{}_{}.ppm", prefix, c, c, i), fmt::format("{}{}", prefix, c),
                         fmt::format("cat{}", c % 12), source, Split::unassigned});
    }
  }
  return Manifest(std::move(records));
}

std::map<std::string, std::size_t> split_tally(const Manifest& m) {
  std::map<std::string, std::size_t> t;
  for (const auto& r : m.records()) ++t[std::string(to_string(r.split))];
  return t;
}

}  // namespace

TEST_CASE("load_manifest") {
  const auto dir = scratch("load");
  write_text(dir / "empty.tsv", "");
  const auto empty = load_manifest(dir / "empty.tsv");
  CHECK(empty.empty());
  CHECK(empty.class_count() == 0);

  write_text(dir / "three.tsv", "# comment\nimg/a.ppm\tpaella\trice\tB\nimg/b.ppm\tpaella\trice\tB\nimg/c.ppm\tsnails\t-\tB\ttest\n");
  const auto three = load_manifest(dir / "three.tsv");
  CHECK(three.size() == 3);
  CHECK(three.class_count() == 2);
  CHECK(three.class_of(0) == 0);
  CHECK(three.class_of(2) == 1);
  CHECK(three.records()[0].image_path == (dir / "img/a.ppm").string());
  CHECK(!three.records()[2].category_label.has_value());
  CHECK(three.records()[2].split == Split::test);
  CHECK(three.category_index().size() == 1);

  write_text(dir / "bad.tsv", "a.ppm\tx\t-\tA\nb.ppm\t\t-\tA\n");
  try {
    load_manifest(dir / "bad.tsv");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  write_text(dir / "dup.tsv", "a.ppm\tx\t-\tA\na.ppm\ty\t-\tA\n");
  CHECK_THROWS_AS(load_manifest(dir / "dup.tsv"), ValidationError);
  write_text(dir / "src.tsv", "a.ppm\tx\t-\tC\n");
  CHECK_THROWS_AS(load_manifest(dir / "src.tsv"), ValidationError);
  CHECK_THROWS_AS(load_manifest(dir / "missing.tsv"), IoError);

  SUBCASE("save and reload") {
    save_manifest(dir / "sub" / "copy.tsv", three);
    CHECK(load_manifest(dir / "sub" / "copy.tsv") == three);
  }
}

TEST_CASE("filter_min_images") {
  // 140 classes; 115 of them hold at least 100 images
  std::vector<std::size_t> sizes;
  for (std::size_t c = 0; c < 140; ++c) sizes.push_back(c < 115 ? 100 + c % 7 : 40 + c % 50);
  const auto m = sized_manifest(sizes);
  const auto kept = filter_min_images(m, 100);
  CHECK(kept.class_count() == 115);
  CHECK(filter_min_images(kept, 100) == kept);
  for (std::size_t c = 0; c < kept.class_count(); ++c) CHECK(kept.class_sizes()[c] >= 100);
  CHECK(filter_min_images(m, 1) == m);
  CHECK(filter_min_images(m, 10000).empty());
  CHECK_THROWS_AS(filter_min_images(m, 0), ContractError);
}

TEST_CASE("merge_datasets") {
  const auto a = sized_manifest(std::vector<std::size_t>(101, 3), Source::A, "food101");
  const auto b = sized_manifest(std::vector<std::size_t>(115, 2), Source::B, "foodcat");
  const auto merged = merge_datasets(a, b);
  CHECK(merged.class_count() == 216);
  CHECK(merged.class_of(a.size()) == 101);
  CHECK(merge_datasets(a, Manifest{}) == a);
  CHECK(filter_by_source(merged, Source::A) == a);
  CHECK(filter_by_source(merged, Source::B) == b);

  SUBCASE("same dish name in both sets stays two classes") {
    const auto x = sized_manifest({2}, Source::A, "same");
    std::vector<SampleRecord> other;
    for (auto r : x.records()) {
      r.image_path += ".b";
      other.push_back(r);
    }
    CHECK(merge_datasets(x, Manifest(other)).class_count() == 2);
    CHECK_THROWS_AS(merge_datasets(x, x), ValidationError);
  }
}

TEST_CASE("balance_classes") {
  const auto m = sized_manifest({600, 120, 500, 501});
  const auto b = balance_classes(m, 500, 42);
  CHECK(b.class_sizes() == std::vector<std::size_t>{500, 120, 500, 500});
  CHECK(balance_classes(m, 500, 42) == b);
  CHECK(balance_classes(b, 500, 42) == b);
  CHECK(balance_classes(m, 500, 7) != b);
  CHECK(balance_classes(m, 1000, 1) == m);
  CHECK_THROWS_AS(balance_classes(m, 0, 1), ContractError);

  Rng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::size_t> sizes(1 + rng.index(10));
    for (auto& s : sizes) s = 1 + rng.index(60);
    const auto src = sized_manifest(sizes);
    const std::size_t cap = 1 + rng.index(40);
    const auto out = balance_classes(src, cap, rng.next());
    REQUIRE(out.class_count() == src.class_count());
    for (std::size_t c = 0; c < sizes.size(); ++c) REQUIRE(out.class_sizes()[c] == std::min(sizes[c], cap));
    // survivors are a subsequence of the input
    std::size_t j = 0;
    for (const auto& r : src.records())
      if (j < out.size() && out.records()[j] == r) ++j;
    REQUIRE(j == out.size());
  }
}

TEST_CASE("split_dataset") {
  SUBCASE("101 classes of 1000") {
    const auto m = sized_manifest(std::vector<std::size_t>(101, 1000));
    const auto s = split_dataset(m, {}, 42);
    const auto t = split_tally(s.manifest);
    CHECK(t.at("train") == 80800);
    CHECK(t.at("val") == 10100);
    CHECK(t.at("test") == 10100);
    CHECK(s.warnings.empty());
  }
  CHECK(split_counts(10, {}) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(split_counts(7, {}) == std::array<std::size_t, 3>{5, 1, 1});
  const auto m = sized_manifest({10, 2, 37});
  const auto all_train = split_dataset(m, {1.0, 0.0, 0.0}, 1);
  CHECK(split_tally(all_train.manifest).at("train") == m.size());
  const auto s = split_dataset(m, {}, 9);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("A:d1") != std::string::npos);
  CHECK(split_dataset(s.manifest, {}, 9).manifest == s.manifest);
  CHECK(split_dataset(m, {}, 9).manifest == s.manifest);
  CHECK_THROWS_AS(split_dataset(m, {0.5, 0.2, 0.2}, 1), ValidationError);
  CHECK_THROWS_AS(split_dataset(m, {1.2, -0.1, -0.1}, 1), ValidationError);

  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::size_t> sizes(1 + rng.index(8));
    for (auto& v : sizes) v = 1 + rng.index(80);
    const auto src = sized_manifest(sizes);
    const double tr = 0.5 + 0.4 * rng.uniform(), va = (1.0 - tr) * rng.uniform();
    const SplitRatios ratios{tr, va, 1.0 - tr - va};
    const auto out = split_dataset(src, ratios, rng.next()).manifest;
    // same records, each in exactly one split
    REQUIRE(out.size() == src.size());
    std::size_t tally = 0;
    for (auto sp : {Split::train, Split::val, Split::test}) tally += filter_by_split(out, sp).size();
    REQUIRE(tally == src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      auto r = out.records()[i];
      r.split = Split::unassigned;
      REQUIRE(r == src.records()[i]);
    }
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (sizes[c] < 3) continue;
      const auto counts = split_counts(sizes[c], ratios);
      REQUIRE(counts[0] + counts[1] + counts[2] == sizes[c]);
      const double n = static_cast<double>(sizes[c]);
      REQUIRE(std::abs(static_cast<double>(counts[0]) - n * ratios.train) < 1.0 + 1e-9);
      REQUIRE(std::abs(static_cast<double>(counts[1]) - n * ratios.val) < 1.0 + 1e-9);
      REQUIRE(std::abs(static_cast<double>(counts[2]) - n * ratios.test) < 1.0 + 1e-9);
    }
  }
}

TEST_CASE("apply_variant") {
  const auto dir = scratch("variant");
  const auto root = dir / "data";
  write_pnm(root / "A" / "big.ppm", render_class_image(0, 0, 512, 512, 1));
  write_pnm(root / "B" / "wide.ppm", render_class_image(1, 0, 402, 125, 1));
  write_pnm(root / "B" / "fine.ppm", render_class_image(2, 0, 300, 300, 1));
  write_text(root / "B" / "broken.ppm", "P6\n10 10\n255\nxx");
  const std::vector<SampleRecord> recs{
      {(root / "A" / "big.ppm").string(), "a", std::nullopt, Source::A, Split::train},
      {(root / "B" / "wide.ppm").string(), "b", std::nullopt, Source::B, Split::train},
      {(root / "B" / "fine.ppm").string(), "c", std::nullopt, Source::B, Split::train},
      {(root / "B" / "broken.ppm").string(), "c", std::nullopt, Source::B, Split::train},
  };
  const Manifest m(recs);
  ScnBank bank;
  bank.add(init_scn(3));
  VariantOptions opt;
  opt.source_root = root;

  const auto orig = apply_variant(m, DatasetVariant::original, &bank, opt);
  CHECK(orig.manifest == m);
  CHECK(orig.written == 0);

  const auto halved = apply_variant(m, DatasetVariant::a_halved, nullptr, opt);
  CHECK(halved.errors.empty());
  CHECK(halved.written == 1);
  const auto& hp = halved.manifest.records()[0].image_path;
  CHECK(hp == (dir / "data_a_halved" / "A" / "big.ppm").string());
  const auto hs = read_pnm_size(hp);
  CHECK(hs.width == 256);
  CHECK(hs.height == 256);
  CHECK(halved.manifest.records()[1] == recs[1]);

  const auto lifted = apply_variant(m, DatasetVariant::b_super_resolved, &bank, opt);
  CHECK(lifted.written == 1);
  REQUIRE(lifted.errors.size() == 1);
  CHECK(lifted.errors[0].find("broken.ppm") != std::string::npos);
  CHECK(lifted.manifest.size() == 3);
  const auto ws = read_pnm_size(lifted.manifest.records()[1].image_path);
  CHECK(ws.width == 1206);
  CHECK(ws.height == 375);
  CHECK(lifted.manifest.records()[2] == recs[2]);  // 300x300 needs no lift
  CHECK(lifted.manifest.records()[0] == recs[0]);  // source A untouched
  CHECK_THROWS_AS(apply_variant(m, DatasetVariant::b_super_resolved, nullptr, opt), ContractError);
  fs::remove_all(dir);
}

TEST_CASE("sample preparation") {
  const auto img = render_class_image(3, 1, 300, 200, 5);
  SampleOptions opt;
  opt.mean = {0.4, 0.5, 0.6};
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    CropOffset o;
    const auto t = prepare_train_sample(img, opt, rng, &o);
    REQUIRE(t.shape() == Shape{3, 224, 224});
    REQUIRE(o.x <= 32);
    REQUIRE(o.y <= 32);
  }
  Rng a(99), b(99);
  CHECK(prepare_train_sample(img, opt, a) == prepare_train_sample(img, opt, b));
  CHECK(prepare_eval_sample(img, opt) == prepare_eval_sample(img, opt));

  SUBCASE("central crop offset is 16") {
    RasterImage grid(256, 256, 3);
    for (std::size_t y = 0; y < 256; ++y)
      for (std::size_t x = 0; x < 256; ++x)
        for (std::size_t c = 0; c < 3; ++c) grid.at(x, y, c) = static_cast<std::uint8_t>((x + 3 * y + c) % 256);
    const auto t = prepare_eval_sample(grid, opt);
    CHECK(t.at(0, 0, 0) == doctest::Approx(grid.at(16, 16, 0) / 255.0 - 0.4));
    CHECK(t.at(2, 223, 223) == doctest::Approx(grid.at(239, 239, 2) / 255.0 - 0.6));
  }
  SUBCASE("uniform image") {
    const auto t = prepare_eval_sample(RasterImage(90, 40, 3, 200), opt);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 224 * 224; ++i) REQUIRE(t[c * 224 * 224 + i] == doctest::Approx(200 / 255.0 - opt.mean[c]));
  }
  SUBCASE("gray input expands to three channels") {
    const auto t = prepare_eval_sample(RasterImage(256, 256, 1, 51), SampleOptions{});
    CHECK(t.shape() == Shape{3, 224, 224});
    CHECK(t.at(2, 5, 5) == doctest::Approx(0.2));
  }
  SUBCASE("channel means") {
    std::vector<RasterImage> imgs{RasterImage(2, 2, 3, 0), RasterImage(2, 2, 3, 255)};
    const auto mu = channel_means(imgs);
    for (double v : mu) CHECK(v == doctest::Approx(0.5));
  }
}

TEST_CASE("dataset_stats") {
  std::vector<SampleRecord> recs;
  auto add = [&](const std::string& dish, const std::string& cat, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) recs.push_back({fmt::format("/x/{}/{}.ppm", dish, i), dish, cat, Source::B, Split::train});
  };
  add("boletus", "Mushrooms", 219);
  add("chanterelle", "Mushrooms", 219);
  add("paella", "Rice", 300);
  add("risotto", "Rice", 101);
  add("snails", "Meat", 77);
  const auto s = dataset_stats(Manifest(recs), false);
  CHECK(s.total == 916);
  double pct = 0.0;
  for (const auto& c : s.categories) {
    pct += c.percent;
    if (c.category == "Mushrooms") {
      CHECK(c.images == 438);
      CHECK(c.dishes == 2);
    }
    if (c.category == "Meat") CHECK(c.images == 77);
  }
  CHECK(std::abs(pct - 100.0) <= 0.1);
  CHECK(s.class_counts.size() == 5);
  CHECK(s.class_counts[2].second == 300);
  const auto csv = stats_csv(s);
  CHECK(csv.find("category,Mushrooms,2,438,47.82") != std::string::npos);
}

TEST_CASE("synthetic dataset on disk") {
  const auto dir = scratch("synth");
  SyntheticOptions opt;
  opt.per_class = 3;
  const auto m = generate_synthetic_dataset(dir, opt);
  CHECK(m.size() == 24);
  CHECK(m.class_count() == 8);
  CHECK(load_manifest(dir / "manifest.tsv") == m);
  const auto s = dataset_stats(m);
  REQUIRE(s.dimensions.size() == 24);
  for (const auto& [size, src] : s.dimensions) {
    if (src == Source::A) {
      CHECK(std::max(size.width, size.height) == 64);
    } else {
      CHECK(size.width >= 12);
      CHECK(size.width <= 48);
    }
  }
  CHECK(dimensions_svg(s, "dims").find("<svg") == 0);
  // regenerating is byte-identical
  const auto first = read_pnm(m.records()[5].image_path);
  generate_synthetic_dataset(dir, opt);
  CHECK(read_pnm(m.records()[5].image_path) == first);
  fs::remove_all(dir);
}
