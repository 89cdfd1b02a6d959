// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: one binary with subcommands preprocess, synth,
// train, probe, mask-viz, weights-viz and coverage.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mefem::cli {

enum ExitCode : int { ok = 0, validation_error = 1, runtime_failure = 2 };

/// `args[0]` is the program name. Seeds fall back to MEFEM_SEED when no
/// --seed flag or config value is given.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

} // namespace mefem::cli
