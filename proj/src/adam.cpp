#include "lguided/adam.hpp"

#include <cmath>

#include "lguided/error.hpp"

namespace lguided {

AdamState make_adam_state(const ParamRegistry& reg) {
  AdamState st;
  st.m.reserve(reg.refs.size());
  st.v.reserve(reg.refs.size());
  for (const auto& ref : reg.refs) {
    st.m.emplace_back(ref.tensor->rows, ref.tensor->cols);
    st.v.emplace_back(ref.tensor->rows, ref.tensor->cols);
  }
  return st;
}

void adam_update_tensor(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                        std::size_t step, double lr, double beta1, double beta2,
                        double eps) {
  if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v)) {
    throw ShapeError("adam_update_tensor: parameter " + shape_str(param) +
                     " vs gradient " + shape_str(grad));
  }
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.data[i];
    m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g;
    v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g * g;
    const double m_hat = m.data[i] / bc1;
    const double v_hat = v.data[i] / bc2;
    param.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void adam_step(const ParamRegistry& reg, const GradSet& grads, AdamState& state,
               double lr) {
  if (grads.g.size() != reg.refs.size()) {
    throw ShapeError("adam_step: gradient set does not match the registry");
  }
  ++state.step;
  for (std::size_t i = 0; i < reg.refs.size(); ++i) {
    adam_update_tensor(*reg.refs[i].tensor, grads.g[i], state.m[i], state.v[i],
                       state.step, lr, state.beta1, state.beta2, state.eps);
  }
}

}  // namespace lguided
