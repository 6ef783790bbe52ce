// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grc/bytes.hpp"
#include "grc/tensor.hpp"

namespace grc {

/// One tensor record of a GRCW weight file.
struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

inline constexpr std::uint32_t kGrcwVersion = 1;

/// Flat binary weight file:
///   "GRCW" | version u32 | records until EOF
///   record = name_len u16 | UTF-8 name | rank u8 | dims u32 x rank | f64 x prod(dims)
/// All integers and floats little-endian.
Bytes encode_grcw(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> decode_grcw(std::span<const std::byte> bytes);

void save_grcw(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> load_grcw(const std::filesystem::path& path);

}  // namespace grc
