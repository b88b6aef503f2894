// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <ostream>

namespace vfib::cli {

/// Runs one `vfib` subcommand: gensynth, train, eval, predict, gradcheck or
/// export-attn. Machine-readable results are written to `out` as JSON,
/// diagnostics to `err`.
///
/// Returns 0 on success, 1 on a usage or validation error and 2 on an I/O or
/// file-format error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vfib::cli
