// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/cli.hpp"

int main(int argc, char** argv)
{
  return mefem::cli::dispatch(argc, argv);
}
