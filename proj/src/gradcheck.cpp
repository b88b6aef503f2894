// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vfib/error.hpp"

namespace vfib {

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& [symbol, err] : max_relative_error) w = std::max(w, err);
  return w;
}

double evaluate_loss(const LossBuilder& loss, const ModelParams& params) {
  Graph g(&params);
  Var out = loss(g);
  if (out.value().size() != 1) {
    throw ContractError("loss must be scalar, got shape " +
                        out.value().shape_string());
  }
  return out.value()[0];
}

GradCheckReport grad_check(const LossBuilder& loss, const ModelParams& params,
                           double epsilon) {
  if (!(epsilon > 0.0)) {
    throw DomainError("finite-difference epsilon must be positive");
  }

  std::map<std::string, Tensor> analytic;
  double base = 0.0;
  {
    Graph g(&params);
    Var out = loss(g);
    base = out.value().size() == 1 ? out.value()[0] : 0.0;
    analytic = g.backward(out);
  }
  if (evaluate_loss(loss, params) != base) {
    throw DeterminismError(
        "loss differs between two evaluations at identical parameters");
  }

  GradCheckReport report;
  ModelParams probe = params;
  for (auto& [symbol, tensor] : probe) {
    const auto it = analytic.find(symbol);
    double worst = 0.0;
    GradCheckEntry worst_entry;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + epsilon;
      const double up = evaluate_loss(loss, probe);
      tensor[i] = saved - epsilon;
      const double down = evaluate_loss(loss, probe);
      tensor[i] = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = it != analytic.end() ? it->second[i] : 0.0;
      const double denom =
          std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double rel = std::abs(exact - numeric) / denom;
      if (i == 0 || rel > worst) {
        worst = rel;
        worst_entry = {i, exact, numeric};
      }
      ++report.entries_checked;
    }
    report.max_relative_error[symbol] = worst;
    report.worst_entry[symbol] = worst_entry;
  }
  return report;
}

}  // namespace vfib
