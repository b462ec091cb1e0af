#include "lguided/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <mutex>
#include <thread>

#include "lguided/adam.hpp"
#include "lguided/error.hpp"

namespace lguided {

Metrics evaluate(const Model& model, const std::vector<Document>& docs,
                 const PrecomputedStore* store) {
  if (docs.empty()) throw UsageError("evaluate: empty document list");
  const std::size_t num_labels = model.num_labels();
  std::vector<std::size_t> tp(num_labels, 0), fp(num_labels, 0), fn(num_labels, 0);
  Metrics m;
  m.total = docs.size();
  double loss_sum = 0.0;
  for (const auto& doc : docs) {
    const std::size_t gold = model.label_index(doc.label);
    DocForward fwd = model_forward(model, doc, store, gold);
    loss_sum += fwd.loss;
    if (fwd.predicted == gold) {
      ++m.correct;
      ++tp[gold];
    } else {
      ++fp[fwd.predicted];
      ++fn[gold];
    }
  }
  m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.total);
  m.loss_mean = loss_sum / static_cast<double>(m.total);
  m.precision.resize(num_labels, 0.0);
  m.recall.resize(num_labels, 0.0);
  for (std::size_t i = 0; i < num_labels; ++i) {
    const std::size_t denom_p = tp[i] + fp[i];
    const std::size_t denom_r = tp[i] + fn[i];
    m.precision[i] = denom_p ? static_cast<double>(tp[i]) / denom_p : 0.0;
    m.recall[i] = denom_r ? static_cast<double>(tp[i]) / denom_r : 0.0;
  }
  return m;
}

namespace {

// Deterministic stratified 10% cut; the remainder keeps its original order.
void split_validation(const Model& model, const std::vector<Document>& train,
                      double fraction, std::uint64_t seed,
                      std::vector<Document>& train_out,
                      std::vector<Document>& val_out) {
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < train.size(); ++i) {
    by_label[model.label_index(train[i].label)].push_back(i);
  }
  SeededRng rng(seed ^ 0xDA7A5EED0001ULL);
  std::vector<bool> is_val(train.size(), false);
  for (auto& [label, idxs] : by_label) {
    shuffle(rng, idxs);
    const std::size_t n_val =
        static_cast<std::size_t>(fraction * static_cast<double>(idxs.size()));
    for (std::size_t k = 0; k < n_val; ++k) is_val[idxs[k]] = true;
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    (is_val[i] ? val_out : train_out).push_back(train[i]);
  }
}

struct PaddedExample {
  std::vector<std::size_t> indices;
  std::vector<std::uint8_t> mask;
  std::size_t gold = 0;
  const Document* doc = nullptr;  // precomputed mode
};

void compute_example(const Model& model, const PrecomputedStore* store,
                     const ParamRegistry& reg, const PaddedExample& ex,
                     ExampleGrads& grads, double& loss) {
  DocForward fwd =
      model.hp.contextual == ContextualKind::kPrecomputed
          ? model_forward(model, *ex.doc, store, ex.gold)
          : model_forward_padded(model, ex.indices, ex.mask, ex.gold);
  loss = fwd.loss;
  model_backward(model, reg, fwd, ex.gold, grads);
}

}  // namespace

TrainResult train(Model& model, const Dataset& data, const TrainOptions& opts) {
  const HyperParams& hp = model.hp;
  hp.validate();
  if (data.train.empty()) throw UsageError("train: empty training set");
  {
    std::vector<std::size_t> per_label(model.num_labels(), 0);
    for (const auto& doc : data.train) {
      try {
        ++per_label[model.label_index(doc.label)];
      } catch (const DataError&) {
        throw UsageError("train: document '" + doc.id + "' carries label '" +
                         doc.label + "' which the model was not configured with");
      }
    }
    for (std::size_t i = 0; i < per_label.size(); ++i) {
      if (per_label[i] == 0) {
        throw UsageError("train: label '" + model.labels[i] +
                         "' has no training examples");
      }
    }
  }
  if (hp.contextual == ContextualKind::kPrecomputed && !opts.store) {
    throw UsageError("train: precomputed mode needs a store");
  }

  std::vector<Document> train_docs, val_docs;
  if (!data.dev.empty()) {
    train_docs = data.train;
    val_docs = data.dev;
  } else {
    split_validation(model, data.train, hp.val_fraction, hp.seed, train_docs,
                     val_docs);
  }
  const std::vector<Document>& val_ref = val_docs.empty() ? train_docs : val_docs;

  ParamRegistry reg = trainable_params(model);
  AdamState adam = make_adam_state(reg);
  GradSet batch_grads = make_gradset(reg);
  SeededRng shuffle_rng(hp.seed ^ 0x5F0FF1E5EEDULL);

  TrainResult result;
  std::vector<Matrix> best_params;
  double best_val = -1.0;

  std::vector<std::size_t> order(train_docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const double t0 = opts.clock ? opts.clock() : 0.0;
  double t_prev = t0;

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    shuffle(shuffle_rng, order);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t count = std::min(hp.batch_size, order.size() - start);

      // Pad every example in the batch to the batch's longest document.
      std::vector<PaddedExample> batch(count);
      std::size_t max_k = 0;
      for (std::size_t b = 0; b < count; ++b) {
        const Document& doc = train_docs[order[start + b]];
        batch[b].gold = model.label_index(doc.label);
        batch[b].doc = &doc;
        if (hp.contextual == ContextualKind::kBiLstm) {
          batch[b].indices = doc_indices(model, doc);
          max_k = std::max(max_k, batch[b].indices.size());
        }
      }
      if (hp.contextual == ContextualKind::kBiLstm) {
        for (auto& ex : batch) {
          ex.mask.assign(max_k, 1);
          for (std::size_t j = ex.indices.size(); j < max_k; ++j) ex.mask[j] = 0;
          ex.indices.resize(max_k, Vocabulary::kPad);
        }
      }

      std::vector<ExampleGrads> grads(count);
      std::vector<double> losses(count, 0.0);
      if (hp.workers <= 1 || count <= 1) {
        for (std::size_t b = 0; b < count; ++b) {
          compute_example(model, opts.store, reg, batch[b], grads[b], losses[b]);
        }
      } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
          for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= count) return;
            try {
              compute_example(model, opts.store, reg, batch[b], grads[b], losses[b]);
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
              return;
            }
          }
        };
        std::vector<std::thread> pool;
        const std::size_t n_threads = std::min(hp.workers, count);
        pool.reserve(n_threads);
        for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
      }

      // Reduce in example order regardless of which worker produced what,
      // then step on the batch mean.
      zero_gradset(batch_grads);
      for (std::size_t b = 0; b < count; ++b) {
        reduce_into(batch_grads, reg, grads[b]);
        epoch_loss += losses[b];
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (auto& g : batch_grads.g) {
        for (double& x : g.data) x *= inv;
      }
      if (hp.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& g : batch_grads.g) {
          for (double x : g.data) sq += x * x;
        }
        const double norm = std::sqrt(sq);
        if (norm > hp.clip_norm) {
          const double scale = hp.clip_norm / norm;
          for (auto& g : batch_grads.g) {
            for (double& x : g.data) x *= scale;
          }
        }
      }
      adam_step(reg, batch_grads, adam, hp.learning_rate);
    }

    for (const auto& [name, tensor] : named_tensors(model)) {
      check_finite(*tensor, "after epoch " + std::to_string(epoch) + ": " + name);
    }

    const Metrics val = evaluate(model, val_ref, opts.store);
    const double t_now = opts.clock ? opts.clock() : 0.0;
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(train_docs.size());
    log.val_accuracy = val.accuracy;
    log.seconds = t_now - t_prev;
    t_prev = t_now;
    result.epochs.push_back(log);
    if (opts.progress) {
      (*opts.progress) << "epoch " << epoch << " train_loss " << log.train_loss
                       << " val_accuracy " << log.val_accuracy << "\n";
    }

    if (val.accuracy >= best_val) {  // later epochs win ties
      best_val = val.accuracy;
      result.best_epoch = epoch;
      best_params.clear();
      for (const auto& [name, tensor] : named_tensors(model)) {
        best_params.push_back(*tensor);
      }
    }
  }

  auto tensors = named_tensors_mutable(model);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    *tensors[i].second = best_params[i];
  }
  result.best_val_accuracy = best_val;
  return result;
}

}  // namespace lguided
