#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lguided/classifier.hpp"
#include "lguided/dataset.hpp"
#include "lguided/embedding.hpp"
#include "lguided/label_attention.hpp"
#include "lguided/lstm.hpp"
#include "lguided/precomputed.hpp"
#include "lguided/vocab.hpp"

namespace lguided {

enum class ContextualKind { kBiLstm, kPrecomputed };

struct HyperParams {
  std::size_t batch_size = 25;
  double learning_rate = 0.001;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  std::size_t protos = 5;        // embeddings per label
  std::size_t embed_dim = 300;   // pretrained embedding size
  std::size_t hidden = 150;      // per-direction LSTM size
  std::size_t label_dim = 300;   // label prototype dimension, == 2*hidden
  std::size_t max_len = 400;
  std::size_t min_count = 1;
  bool no_label_layer = false;
  bool freeze_embeddings = false;
  ContextualKind contextual = ContextualKind::kBiLstm;
  std::size_t layer_count = 1;   // precomputed encoder layers consumed
  PoolMode pool = PoolMode::kMean;
  double clip_norm = 0.0;  // 0 disables clipping
  std::size_t workers = 1;
  double val_fraction = 0.1;

  // Applies the desk-scale preset: embed_dim 50, hidden 25 (label_dim 50).
  void apply_desk_preset();

  // Throws ConfigError/UsageError on inconsistent settings, in particular
  // label_dim != 2*hidden for the BiLSTM encoder.
  void validate() const;
};

struct Model {
  HyperParams hp;
  Vocabulary vocab;
  std::vector<std::string> labels;
  EmbeddingTable embedding;                 // unused in precomputed mode
  BiLstm encoder;                           // unused in precomputed mode
  std::vector<LabelEmbeddingSpace> spaces;  // layer_count entries; empty when no_label_layer
  ClassifierHead head;

  std::size_t num_labels() const { return labels.size(); }
  std::size_t context_dim() const;
  std::size_t head_input_dim() const;
  std::size_t label_index(const std::string& name) const;
  std::size_t total_param_count() const;
};

// Initializes all tensors in a fixed order from one rng stream. When
// pretrained_path is nonempty the embedding table is loaded from it.
Model build_model(const HyperParams& hp, const Vocabulary& vocab,
                  const std::vector<std::string>& labels, SeededRng& rng,
                  const std::string& pretrained_path = "",
                  LoadReport* report = nullptr);

// Named handles onto every trainable tensor, in a fixed order. The embedding
// table, when present and trainable, is always slot 0.
struct ParamRef {
  std::string name;
  Matrix* tensor;
};

struct ParamRegistry {
  std::vector<ParamRef> refs;
  std::ptrdiff_t embedding_slot = -1;  // -1: absent or frozen
};

ParamRegistry trainable_params(Model& model);

// Every persistent tensor (frozen ones included), for checkpointing.
std::vector<std::pair<std::string, const Matrix*>> named_tensors(const Model& model);
std::vector<std::pair<std::string, Matrix*>> named_tensors_mutable(Model& model);

// Per-document forward caches.
struct DocForward {
  std::vector<std::size_t> indices;       // vocab indices, truncated to max_len
  Matrix embedded;                        // K x embed_dim
  std::vector<EncodedSequence> encoded;   // one per layer
  std::vector<AttentionRecord> records;   // one per layer (label layer on)
  PoolCache pool;                         // ablation path
  std::vector<double> features;           // classifier input
  HeadCache head;
  double loss = 0.0;
  std::size_t predicted = 0;
};

// Forward pass for one document. `store` is required in precomputed mode.
// gold is the document's label index (used for the loss).
DocForward model_forward(const Model& model, const Document& doc,
                         const PrecomputedStore* store, std::size_t gold);

// BiLSTM-mode forward over an already-padded index sequence (PAD indices with
// mask 0 at the tail). Used by the mini-batch trainer.
DocForward model_forward_padded(const Model& model,
                                std::vector<std::size_t> indices,
                                std::vector<std::uint8_t> mask, std::size_t gold);

// Vocabulary indices of a document's tokens, truncated to max_len.
std::vector<std::size_t> doc_indices(const Model& model, const Document& doc);

// Per-example gradients: dense tensors parallel to the trainable registry,
// except the embedding slot which is kept as sparse rows.
struct ExampleGrads {
  std::vector<Matrix> dense;
  std::vector<std::pair<std::size_t, std::vector<double>>> embedding_rows;
};

void model_backward(const Model& model, const ParamRegistry& reg,
                    const DocForward& fwd, std::size_t gold, ExampleGrads& out);

// Dense gradient accumulators parallel to the registry.
struct GradSet {
  std::vector<Matrix> g;
};

GradSet make_gradset(const ParamRegistry& reg);
void zero_gradset(GradSet& gs);

// Adds one example's gradients into the batch accumulators. Reduction happens
// example by example in dataset order, so results do not depend on how many
// workers produced the ExampleGrads.
void reduce_into(GradSet& gs, const ParamRegistry& reg, const ExampleGrads& eg);

}  // namespace lguided
