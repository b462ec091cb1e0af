#pragma once

#include <cstddef>
#include <vector>

#include "lguided/matrix.hpp"
#include "lguided/model.hpp"

namespace lguided {

// Standard Adam with bias correction; beta1 0.9, beta2 0.999, eps 1e-8.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Matrix> m;  // first moments, parallel to the registry
  std::vector<Matrix> v;  // second moments
};

AdamState make_adam_state(const ParamRegistry& reg);

// One tensor update: param -= lr * m_hat / (sqrt(v_hat) + eps).
// `step` is the 1-based global step already advanced by the caller.
void adam_update_tensor(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                        std::size_t step, double lr, double beta1, double beta2,
                        double eps);

// Whole-registry step; advances state.step once.
void adam_step(const ParamRegistry& reg, const GradSet& grads, AdamState& state,
               double lr);

}  // namespace lguided
