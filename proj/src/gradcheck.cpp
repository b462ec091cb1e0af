#include "lguided/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lguided/error.hpp"

namespace lguided {

GradCheckReport gradient_check(Model& model, const Document& doc,
                               const PrecomputedStore* store, double epsilon,
                               std::size_t samples_per_group, SeededRng& rng) {
  if (model.total_param_count() >= 100000) {
    throw UsageError("gradient_check: model has " +
                     std::to_string(model.total_param_count()) +
                     " parameters; only toy models (< 1e5) are accepted");
  }
  const std::size_t gold = model.label_index(doc.label);

  ParamRegistry reg = trainable_params(model);
  ExampleGrads eg;
  {
    DocForward fwd = model_forward(model, doc, store, gold);
    model_backward(model, reg, fwd, gold, eg);
  }
  GradSet analytic = make_gradset(reg);
  reduce_into(analytic, reg, eg);

  GradCheckReport report;
  for (std::size_t s = 0; s < reg.refs.size(); ++s) {
    Matrix& tensor = *reg.refs[s].tensor;
    std::vector<std::size_t> coords(tensor.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > samples_per_group) {
      shuffle(rng, coords);
      coords.resize(samples_per_group);
    }
    GradCheckGroup group;
    group.name = reg.refs[s].name;
    group.coords_checked = coords.size();
    for (std::size_t c : coords) {
      const double saved = tensor.data[c];
      tensor.data[c] = saved + epsilon;
      const double loss_plus = model_forward(model, doc, store, gold).loss;
      tensor.data[c] = saved - epsilon;
      const double loss_minus = model_forward(model, doc, store, gold).loss;
      tensor.data[c] = saved;
      const double fd = (loss_plus - loss_minus) / (2.0 * epsilon);
      const double an = analytic.g[s].data[c];
      const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
      group.max_rel_err = std::max(group.max_rel_err, std::fabs(fd - an) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, group.max_rel_err);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace lguided
