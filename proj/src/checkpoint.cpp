// Copyright 2026 The GRC Authors
// SPDX-License-Identifier: Apache-2.0

#include "grc/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <limits>

#include "grc/errors.hpp"

namespace grc {

Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Bytes out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

Bytes encode_grcw(const std::vector<NamedArray>& arrays) {
  Bytes out;
  for (char c : std::string("GRCW")) out.push_back(static_cast<std::byte>(c));
  store_le<std::uint32_t>(out, kGrcwVersion);
  for (const auto& a : arrays) {
    if (a.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error("GRCW: name too long: " + a.name.substr(0, 32) + "...");
    }
    if (a.shape.size() > std::numeric_limits<std::uint8_t>::max()) throw Error("GRCW: rank too large");
    if (shape_numel(a.shape) != a.values.size()) {
      throw DimensionError("GRCW: record '" + a.name + "' shape " + shape_str(a.shape) +
                           " does not match its payload");
    }
    store_le<std::uint16_t>(out, static_cast<std::uint16_t>(a.name.size()));
    for (char c : a.name) out.push_back(static_cast<std::byte>(c));
    store_le<std::uint8_t>(out, static_cast<std::uint8_t>(a.shape.size()));
    for (std::size_t d : a.shape) store_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : a.values) store_le<double>(out, v);
  }
  return out;
}

std::vector<NamedArray> decode_grcw(std::span<const std::byte> bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (bytes.size() - pos < n) {
      throw ParseError(std::string("GRCW: truncated ") + what + " at offset " + std::to_string(pos), pos);
    }
  };
  need(8, "header");
  if (std::memcmp(bytes.data(), "GRCW", 4) != 0) throw ParseError("GRCW: bad magic", 0);
  pos = 4;
  const auto version = load_le<std::uint32_t>(bytes.data() + pos);
  pos += 4;
  if (version != kGrcwVersion) {
    throw ParseError("GRCW: unsupported version " + std::to_string(version), 4);
  }
  std::vector<NamedArray> arrays;
  while (pos < bytes.size()) {
    NamedArray a;
    need(2, "name length");
    const auto len = load_le<std::uint16_t>(bytes.data() + pos);
    pos += 2;
    need(len, "name");
    a.name.assign(reinterpret_cast<const char*>(bytes.data() + pos), len);
    pos += len;
    need(1, "rank");
    const auto rank = std::to_integer<std::uint8_t>(bytes[pos]);
    pos += 1;
    need(4 * std::size_t{rank}, "dims");
    for (std::size_t i = 0; i < rank; ++i) {
      a.shape.push_back(load_le<std::uint32_t>(bytes.data() + pos));
      pos += 4;
    }
    const std::size_t n = shape_numel(a.shape);
    need(8 * n, "payload");
    a.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      a.values[i] = load_le<double>(bytes.data() + pos);
      pos += 8;
    }
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void save_grcw(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  const Bytes bytes = encode_grcw(arrays);
  write_file_atomic(path, bytes);
}

std::vector<NamedArray> load_grcw(const std::filesystem::path& path) {
  return decode_grcw(read_file_bytes(path));
}

}  // namespace grc
