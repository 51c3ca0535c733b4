#pragma once

#include <functional>
#include <map>
#include <string>

#include "graphtts/param_store.hpp"
#include "graphtts/tape.hpp"

namespace graphtts {

/// Builds a scalar loss on the given tape from the current parameter values.
using LossFn = std::function<Var(Tape&, ParamStore&)>;

struct FdReport {
  double max_error = 0.0;
  /// Worst relative error per parameter name.
  std::map<std::string, double> per_param;
};

/// Compares reverse-mode gradients against central differences
/// (f(p+eps) - f(p-eps)) / (2 eps) for every entry of every parameter.
/// Relative error is |a - n| / max(1e-8, |a| + |n|). Parameter values are
/// restored exactly; gradients in `params` hold the analytic result on return.
FdReport fd_check(const LossFn& f, ParamStore& params, double eps = 1e-5);

/// Analytic gradients only: zero, one forward/backward pass.
double compute_gradients(const LossFn& f, ParamStore& params);

/// Forward evaluation without recording gradients.
double evaluate(const LossFn& f, ParamStore& params);

}  // namespace graphtts
