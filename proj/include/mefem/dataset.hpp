// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mefem/image.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace mefem {

/// Random-access image source. Implementations must be deterministic: the same
/// index always yields the same pixels.
class Dataset {
public:
  virtual ~Dataset() = default;
  virtual std::size_t size() const = 0;
  virtual Image image(std::size_t index) const = 0;
};

class InMemoryDataset : public Dataset {
public:
  explicit InMemoryDataset(std::vector<Image> images) : images_(std::move(images)) {}
  std::size_t size() const override { return images_.size(); }
  Image image(std::size_t index) const override { return images_.at(index); }

private:
  std::vector<Image> images_;
};

/// PNG files of a directory, sorted by file name.
class DirectoryDataset : public Dataset {
public:
  explicit DirectoryDataset(const std::string& dir);
  std::size_t size() const override { return paths_.size(); }
  Image image(std::size_t index) const override;
  const std::vector<std::string>& paths() const { return paths_; }

private:
  std::vector<std::string> paths_;
};

} // namespace mefem
