// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace avseci {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`. Parent
// directories are created.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view text);

// Hex SHA-256 of a byte buffer / file.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

// FNV-1a 64-bit; used to derive per-name seeds.
std::uint64_t fnv1a64(std::string_view text);

// Mixes a global seed with a name into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

// Little-endian float32 packing.
void append_f32_le(std::vector<std::uint8_t>& out, float v);
float read_f32_le(const std::uint8_t* p);

}  // namespace avseci
