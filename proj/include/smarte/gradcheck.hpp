#pragma once

#include <functional>
#include <span>
#include <string>

#include "smarte/autodiff.hpp"

namespace smarte {

struct GradCheckOptions {
  double step = 1e-5;
  /// Entries probed per parameter; 0 probes all of them.
  int max_entries_per_param = 0;
  unsigned long long seed = 0;
};

struct GradCheckResult {
  /// max over parameters of max_i |analytic_i - numeric_i| / max(|analytic|_inf, |numeric|_inf)
  /// on the probed entries of that parameter.
  double max_rel_error = 0.0;
  std::string worst_param;
};

/// Compares reverse-mode gradients of `loss_fn` against central differences.
/// `loss_fn` must rebuild the scalar on the tape it is given from the current
/// parameter values; it is called 1 + 2 * probed entries times.
GradCheckResult check_gradients(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                                const GradCheckOptions& opts = {});

}  // namespace smarte
