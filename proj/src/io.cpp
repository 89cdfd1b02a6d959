// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mefem {

void write_file_atomic(const std::string& path, std::string_view contents)
{
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error(fmt::format("cannot open '{}' for writing", tmp));
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error(fmt::format("write to '{}' failed", tmp));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error(fmt::format("cannot rename '{}' to '{}'", tmp, path));
  }
}

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot open '{}'", path));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string matrix_to_csv(const std::vector<double>& values, int rows, int cols)
{
  std::string out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out += fmt::format("{}{:.6f}", c ? "," : "", values[static_cast<std::size_t>(r) * cols + c]);
    }
    out += '\n';
  }
  return out;
}

std::string matrix_to_pgm(const std::vector<double>& values, int rows, int cols, const std::string& comment)
{
  std::string out = "P5\n";
  if (!comment.empty()) {
    out += "# " + comment + "\n";
  }
  out += fmt::format("{} {}\n255\n", cols, rows);
  for (int i = 0; i < rows * cols; ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    out += static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace mefem
