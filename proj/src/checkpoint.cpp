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

#include "dietnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <iterator>

#include "dietnet/errors.hpp"

namespace dietnet {

namespace {

constexpr char kMagic[4] = {'D', 'N', 'T', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return std::bit_cast<float>(v);
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ValidationError(fmt::format("checkpoint truncated at byte {}", pos_));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedParameter> params) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u64(out, params.size());
  for (const auto& p : params) {
    put_u64(out, p.name.size());
    out.insert(out.end(), p.name.begin(), p.name.end());
    put_u64(out, p.tensor.rank());
    for (auto d : p.tensor.shape()) put_u64(out, d);
    for (double v : p.tensor.data()) put_f32(out, static_cast<float>(v));
  }
  return out;
}

std::vector<NamedParameter> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ValidationError("not a DNT1 checkpoint (bad magic)");
  }
  Reader r(bytes.subspan(4));
  const auto count = r.u64();
  std::vector<NamedParameter> params;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedParameter p;
    p.name = r.str(r.u64());
    const auto rank = r.u64();
    if (rank == 0 || rank > 8) throw ValidationError(fmt::format("checkpoint tensor '{}' has rank {}", p.name, rank));
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) v = static_cast<double>(r.f32());
    p.tensor = Tensor(std::move(shape), std::move(data));
    params.push_back(std::move(p));
  }
  if (!r.done()) throw ValidationError("trailing bytes after checkpoint payload");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedParameter> params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<NamedParameter> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace dietnet
