#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cse/param_store.hpp"

namespace cse {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t checked = 0;

  bool ok(double tol) const { return checked > 0 && max_rel_err < tol; }
};

// Central-difference check of every parameter element against the analytic
// gradient. `f(bool with_grad)` must return the loss; when with_grad is true
// it must also leave gradients in the store (which this zeroes first).
// Double precision only: float truncation swamps the comparison.
template <typename F>
GradCheckReport finite_diff_check(ParamStoreT<double>& ps, F&& f,
                                  double eps = 1e-3) {
  ps.zero_grads();
  f(true);

  std::vector<TensorT<double>> analytic;
  analytic.reserve(ps.params().size());
  for (const auto& p : ps.params()) analytic.push_back(p.grad);

  GradCheckReport rep;
  for (size_t k = 0; k < ps.params().size(); ++k) {
    auto& p = ps.params()[k];
    for (size_t i = 0; i < p.value.size(); ++i) {
      double orig = p.value[i];
      p.value[i] = orig + eps;
      double lp = f(false);
      p.value[i] = orig - eps;
      double lm = f(false);
      p.value[i] = orig;

      double numeric = (lp - lm) / (2.0 * eps);
      double a = analytic[k][i];
      double rel = std::abs(a - numeric) /
                   std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = p.name;
        rep.worst_index = i;
      }
    }
  }
  ps.zero_grads();
  return rep;
}

}  // namespace cse
