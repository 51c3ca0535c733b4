#include "graphtts/fd_check.hpp"

#include <algorithm>
#include <cmath>

namespace graphtts {

double compute_gradients(const LossFn& f, ParamStore& params) {
  params.zero_grad();
  Tape tape;
  Var loss = f(tape, params);
  const double value = loss.value()[0];
  tape.backward(loss);
  return value;
}

double evaluate(const LossFn& f, ParamStore& params) {
  Tape tape(GradMode::kDisabled);
  Var loss = f(tape, params);
  if (loss.value().size() != 1) {
    throw NonScalarLoss("loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  return loss.value()[0];
}

FdReport fd_check(const LossFn& f, ParamStore& params, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("fd_check: eps must be positive");
  compute_gradients(f, params);
  FdReport report;
  for (auto& [name, p] : params) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double original = p.value[i];
      p.value[i] = original + eps;
      const double up = evaluate(f, params);
      p.value[i] = original - eps;
      const double down = evaluate(f, params);
      p.value[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p.grad[i];
      const double err =
          std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, err);
    }
    report.per_param[name] = worst;
    report.max_error = std::max(report.max_error, worst);
  }
  return report;
}

}  // namespace graphtts
