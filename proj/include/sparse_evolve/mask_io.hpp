// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sparse_evolve/sparse_param.hpp"

namespace sparse_evolve {

/// Mask file layout:
///
///   sparse-evolve-mask 1\n
///   layers <L>\n
///   <rank> <d0> ... <d_rank-1> <nonzero> <density %.17g>\n     (L lines)
///   payload\n
///   <bitset bytes>
///
/// The payload packs each layer's pattern LSB-first, 8 positions per byte,
/// each layer starting on a byte boundary.
std::string encode_masks(const std::vector<Mask>& masks);
std::vector<Mask> decode_masks(const std::string& bytes);

void save_masks(const std::filesystem::path& path, const std::vector<Mask>& masks);
std::vector<Mask> load_masks(const std::filesystem::path& path);

}  // namespace sparse_evolve
