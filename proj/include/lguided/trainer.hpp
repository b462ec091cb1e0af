#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "lguided/dataset.hpp"
#include "lguided/model.hpp"
#include "lguided/precomputed.hpp"

namespace lguided {

struct Metrics {
  double accuracy = 0.0;
  double loss_mean = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<double> precision;  // per label index; 0 when undefined
  std::vector<double> recall;
};

Metrics evaluate(const Model& model, const std::vector<Document>& docs,
                 const PrecomputedStore* store = nullptr);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainOptions {
  const PrecomputedStore* store = nullptr;
  // Monotonic-seconds source for the per-epoch timing field. Leave empty for
  // fully deterministic logs (seconds reported as 0).
  std::function<double()> clock;
  std::ostream* progress = nullptr;  // per-epoch lines, normally stderr
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  double best_val_accuracy = 0.0;
  std::size_t best_epoch = 0;
};

// Mini-batch training: seeded per-epoch shuffle, per-example gradients summed
// in example order, one Adam step per batch (gradient = batch mean). Retains
// the best-on-validation parameters (later epochs win ties) and restores them
// on return. Validation is the dev split when present, otherwise a 10%
// stratified cut of train; when that cut is empty validation falls back to
// the train split itself. Parameters are checked finite every epoch.
TrainResult train(Model& model, const Dataset& data, const TrainOptions& opts = {});

}  // namespace lguided
