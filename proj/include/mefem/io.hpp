// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// File output helpers shared by the CLI exports.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mefem {

/// Write to `path` + ".tmp" and rename over `path`; the previous file stays
/// intact if anything fails before the rename.
void write_file_atomic(const std::string& path, std::string_view contents);

std::string read_file(const std::string& path);

/// `rows` lines of `cols` comma-separated values.
std::string matrix_to_csv(const std::vector<double>& values, int rows, int cols);

/// Binary 8-bit PGM (P5); each value in [0, 1] is scaled by 255 and rounded.
/// `comment` (without '#') is embedded in the header when non-empty.
std::string matrix_to_pgm(const std::vector<double>& values, int rows, int cols, const std::string& comment = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace mefem
