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

#include <fmt/format.h>
#include <sstream>

#include "dietnet/errors.hpp"
#include "dietnet/models.hpp"

namespace dietnet {

namespace {

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::size_t to_size(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("model spec line {}: '{}' is not a non-negative integer", line_no, s));
  }
}

double to_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("model spec line {}: '{}' is not a number", line_no, s));
  }
}

}  // namespace

ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec spec;
  spec.blocks.clear();
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& ch : line) {
      if (ch == '=') ch = ' ';
    }
    auto w = split_words(line);
    if (w.empty()) continue;
    auto expect = [&](std::size_t n) {
      if (w.size() != n) {
        throw ValidationError(fmt::format("model spec line {}: '{}' expects {} fields, got {}", line_no, w[0], n - 1,
                                          w.size() - 1));
      }
    };
    if (w[0] == "input") {
      expect(4);
      spec.input_shape = {to_size(w[1], line_no), to_size(w[2], line_no), to_size(w[3], line_no)};
    } else if (w[0] == "classes") {
      expect(2);
      spec.num_classes = to_size(w[1], line_no);
    } else if (w[0] == "aux") {
      expect(3);
      spec.aux_heads.push_back({to_size(w[1], line_no), to_double(w[2], line_no)});
    } else if (w[0] == "block") {
      if (w.size() < 2) throw ValidationError(fmt::format("model spec line {}: block without a kind", line_no));
      const auto& kind = w[1];
      if (kind == "conv") {
        expect(6);
        spec.blocks.push_back(ConvBlock{to_size(w[2], line_no), to_size(w[3], line_no), to_size(w[4], line_no),
                                        to_size(w[5], line_no)});
      } else if (kind == "pool") {
        expect(5);
        spec.blocks.push_back(PoolBlock{to_size(w[2], line_no), to_size(w[3], line_no), to_size(w[4], line_no)});
      } else if (kind == "inception") {
        expect(8);
        InceptionBlock b;
        b.branches[0] = {BranchKind::conv1x1, 0, to_size(w[2], line_no)};
        b.branches[1] = {BranchKind::reduce_conv3x3, to_size(w[3], line_no), to_size(w[4], line_no)};
        b.branches[2] = {BranchKind::reduce_conv5x5, to_size(w[5], line_no), to_size(w[6], line_no)};
        b.branches[3] = {BranchKind::pool3x3_conv1x1, 0, to_size(w[7], line_no)};
        spec.blocks.push_back(b);
      } else if (kind == "gap") {
        expect(2);
        spec.blocks.push_back(GlobalAvgPoolBlock{});
      } else if (kind == "flatten") {
        expect(2);
        spec.blocks.push_back(FlattenBlock{});
      } else if (kind == "fc") {
        if (w.size() != 3 && w.size() != 4) throw ValidationError(fmt::format("model spec line {}: block fc <out> [relu|linear]", line_no));
        bool relu = true;
        if (w.size() == 4) {
          if (w[3] != "relu" && w[3] != "linear") {
            throw ValidationError(fmt::format("model spec line {}: unknown activation '{}'", line_no, w[3]));
          }
          relu = w[3] == "relu";
        }
        spec.blocks.push_back(LinearBlock{to_size(w[2], line_no), relu});
      } else {
        throw ValidationError(fmt::format("model spec line {}: unknown block kind '{}'", line_no, kind));
      }
    } else {
      throw ValidationError(fmt::format("model spec line {}: unknown key '{}'", line_no, w[0]));
    }
  }
  return spec;
}

std::string format_model_spec(const ModelSpec& spec) {
  std::string out = fmt::format("input = {} {} {}\nclasses = {}\n", spec.input_shape.at(0), spec.input_shape.at(1),
                                spec.input_shape.at(2), spec.num_classes);
  for (const auto& a : spec.aux_heads) out += fmt::format("aux = {} {}\n", a.after_block, a.discount);
  for (const auto& b : spec.blocks) {
    if (const auto* c = std::get_if<ConvBlock>(&b)) {
      out += fmt::format("block conv {} {} {} {}\n", c->out_channels, c->kernel, c->stride, c->padding);
    } else if (const auto* p = std::get_if<PoolBlock>(&b)) {
      out += fmt::format("block pool {} {} {}\n", p->window, p->stride, p->padding);
    } else if (const auto* inc = std::get_if<InceptionBlock>(&b)) {
      const auto& br = inc->branches;
      out += fmt::format("block inception {} {} {} {} {} {}\n", br[0].out_channels, br[1].reduce_channels,
                         br[1].out_channels, br[2].reduce_channels, br[2].out_channels, br[3].out_channels);
    } else if (std::holds_alternative<GlobalAvgPoolBlock>(b)) {
      out += "block gap\n";
    } else if (std::holds_alternative<FlattenBlock>(b)) {
      out += "block flatten\n";
    } else if (const auto* l = std::get_if<LinearBlock>(&b)) {
      out += fmt::format("block fc {} {}\n", l->out_features, l->relu ? "relu" : "linear");
    }
  }
  return out;
}

}  // namespace dietnet
