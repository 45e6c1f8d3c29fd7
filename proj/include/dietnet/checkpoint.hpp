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

#include <filesystem>
#include <span>
#include <vector>

#include "dietnet/optim.hpp"

namespace dietnet {

// Binary parameter file:
//   "DNT1" | u64 count | per tensor: u64 name_len, name bytes, u64 rank,
//   rank x u64 dims, numel x f32 values
// All integers and floats little-endian. Values are stored as 32-bit floats,
// so a load/save cycle of an existing file reproduces it byte-for-byte.
void save_checkpoint(const std::filesystem::path& path, std::span<const NamedParameter> params);
std::vector<NamedParameter> load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedParameter> params);
std::vector<NamedParameter> decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace dietnet
