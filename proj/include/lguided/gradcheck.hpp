#pragma once

#include <string>
#include <vector>

#include "lguided/model.hpp"

namespace lguided {

struct GradCheckGroup {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_err = 0.0;
};

// Central finite differences against the analytic gradient of the full
// per-document loss, coordinate-sampled per parameter group. Only accepts toy
// models (total parameter count < 1e5) to bound runtime.
//
// rel err = |fd - analytic| / max(|fd|, |analytic|, 1e-6).
GradCheckReport gradient_check(Model& model, const Document& doc,
                               const PrecomputedStore* store, double epsilon,
                               std::size_t samples_per_group, SeededRng& rng);

}  // namespace lguided
