// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace mefem {

std::uint64_t Rng::uniform_int(std::uint64_t n)
{
  if (n == 0) {
    throw std::invalid_argument("Rng::uniform_int: empty range");
  }
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = 0;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal()
{
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::state() const
{
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore(const std::string& state)
{
  std::istringstream is(state);
  is >> engine_;
  if (is.fail()) {
    throw std::runtime_error("Rng::restore: malformed engine state");
  }
}

} // namespace mefem
