// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/config.hpp"

#include "mefem/io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <filesystem>

namespace mefem {

namespace {

std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename V>
V parse_number(const std::string& key, const std::string& text)
{
  V v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}' as a number", key, text));
  }
  return v;
}

} // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& origin)
{
  KeyValueConfig cfg;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(fmt::format("{}:{}: empty key", origin, line_no));
    }
    cfg.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path)
{
  if (!std::filesystem::exists(path)) {
    throw ConfigError(fmt::format("config file '{}' does not exist", path));
  }
  return parse(read_file(path), path);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const
{
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const
{
  return get(key).value_or(fallback);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const
{
  const auto v = get(key);
  return v ? parse_number<int>(key, *v) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const
{
  const auto v = get(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
  const auto v = get(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError(fmt::format("config key '{}': '{}' is not a boolean", key, *v));
}

void KeyValueConfig::merge(const KeyValueConfig& overrides)
{
  for (const auto& [k, v] : overrides.values_) {
    values_[k] = v;
  }
}

void KeyValueConfig::check_known(const std::set<std::string>& known) const
{
  for (const auto& [k, v] : values_) {
    if (!known.count(k)) {
      throw ConfigError(fmt::format("unknown config key '{}'", k));
    }
  }
}

std::string KeyValueConfig::to_text() const
{
  std::string out;
  for (const auto& [k, v] : values_) {
    out += fmt::format("{} = {}\n", k, v);
  }
  return out;
}

} // namespace mefem
