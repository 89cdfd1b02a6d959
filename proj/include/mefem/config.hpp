// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` configuration text. '#' starts a comment; blank lines are
// ignored; later assignments win.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mefem {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class KeyValueConfig {
public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<text>");
  static KeyValueConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Values from `overrides` replace ours.
  void merge(const KeyValueConfig& overrides);
  /// Throws ConfigError naming the first key not in `known`.
  void check_known(const std::set<std::string>& known) const;

  /// Canonical text: keys sorted, one `key = value` per line.
  std::string to_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

} // namespace mefem
