// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include <iostream>

#include "vfib/cli.hpp"

int main(int argc, char** argv) {
  return vfib::cli::run(argc, argv, std::cout, std::cerr);
}
