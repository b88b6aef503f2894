// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <functional>
#include <map>
#include <string>

#include "vfib/graph.hpp"

namespace vfib {

/// Builds a scalar loss inside a graph whose parameters come from a store.
using LossBuilder = std::function<Var(Graph&)>;

/// The entry of one symbol with the largest relative error.
struct GradCheckEntry {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  /// Max over entries of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
  std::map<std::string, double> max_relative_error;
  std::map<std::string, GradCheckEntry> worst_entry;
  std::size_t entries_checked = 0;

  double worst() const;
  bool passes(double tolerance) const { return worst() < tolerance; }
};

/// Evaluates the loss built by `loss` over `params` without differentiating.
double evaluate_loss(const LossBuilder& loss, const ModelParams& params);

/// Compares reverse-mode gradients against central finite differences
/// (f(x+eps) - f(x-eps)) / 2eps for every entry of every symbol in `params`.
///
/// Throws DomainError if epsilon <= 0 and DeterminismError if two loss
/// evaluations at identical parameters disagree.
GradCheckReport grad_check(const LossBuilder& loss, const ModelParams& params,
                           double epsilon);

}  // namespace vfib
