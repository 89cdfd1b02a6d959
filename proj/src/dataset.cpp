// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <stdexcept>

namespace mefem {

DirectoryDataset::DirectoryDataset(const std::string& dir)
{
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error(fmt::format("dataset directory '{}' does not exist", dir));
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      paths_.push_back(entry.path().string());
    }
  }
  std::sort(paths_.begin(), paths_.end());
}

Image DirectoryDataset::image(std::size_t index) const
{
  return load_image(paths_.at(index));
}

} // namespace mefem
