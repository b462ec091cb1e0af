#include "lguided/model.hpp"

#include <algorithm>

#include "lguided/error.hpp"

namespace lguided {

void HyperParams::apply_desk_preset() {
  embed_dim = 50;
  hidden = 25;
  label_dim = 50;
}

void HyperParams::validate() const {
  if (protos == 0) throw UsageError("t must be >= 1 (embeddings per label)");
  if (batch_size == 0) throw UsageError("batch size must be >= 1");
  if (epochs == 0) throw UsageError("epochs must be >= 1");
  if (learning_rate < 0.0) throw UsageError("learning rate must be >= 0");
  if (max_len == 0) throw UsageError("max length must be >= 1");
  if (workers == 0) throw UsageError("workers must be >= 1");
  if (clip_norm < 0.0) throw UsageError("clip norm must be >= 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw UsageError("validation fraction must be in [0, 1)");
  }
  if (layer_count == 0) throw UsageError("layer count must be >= 1");
  if (contextual == ContextualKind::kBiLstm) {
    if (hidden == 0 || embed_dim == 0) {
      throw UsageError("hidden size and embedding size must be >= 1");
    }
    if (label_dim != 2 * hidden) {
      throw ConfigError(
          "label embedding dimension " + std::to_string(label_dim) +
          " must equal the BiLSTM contextual dimension 2*h = " +
          std::to_string(2 * hidden) +
          " (cosine compatibility requires equal dimensions)");
    }
    if (layer_count != 1) {
      throw ConfigError("the BiLSTM encoder produces a single layer; --layers " +
                        std::to_string(layer_count) +
                        " requires --contextual precomputed");
    }
  }
  if (no_label_layer && layer_count != 1) {
    throw ConfigError("--no-label-layer pools a single contextual layer");
  }
}

std::size_t Model::context_dim() const {
  return hp.contextual == ContextualKind::kPrecomputed ? hp.label_dim
                                                       : 2 * hp.hidden;
}

std::size_t Model::head_input_dim() const {
  if (hp.no_label_layer) return context_dim();
  return hp.layer_count * num_labels() * context_dim();
}

std::size_t Model::label_index(const std::string& name) const {
  auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) throw DataError("unknown label '" + name + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

std::size_t Model::total_param_count() const {
  std::size_t n = 0;
  for (const auto& [name, tensor] : named_tensors(*this)) n += tensor->size();
  return n;
}

namespace {

// Allocates every tensor at its final shape, zero-filled. Shared between
// random initialization and checkpoint loading so shapes agree by
// construction.
Model make_skeleton(const HyperParams& hp, const Vocabulary& vocab,
                    const std::vector<std::string>& labels) {
  hp.validate();
  if (labels.size() < 2) throw UsageError("need at least two labels");
  Model m;
  m.hp = hp;
  m.vocab = vocab;
  m.labels = labels;
  const std::size_t num_labels = labels.size();
  if (hp.contextual == ContextualKind::kBiLstm) {
    m.embedding.table = Matrix(vocab.size(), hp.embed_dim);
    m.embedding.trainable = !hp.freeze_embeddings;
    m.encoder.fwd.W = Matrix(4 * hp.hidden, hp.embed_dim);
    m.encoder.fwd.U = Matrix(4 * hp.hidden, hp.hidden);
    m.encoder.fwd.b = Matrix(1, 4 * hp.hidden);
    m.encoder.bwd = m.encoder.fwd;
  }
  if (!hp.no_label_layer) {
    for (std::size_t l = 0; l < hp.layer_count; ++l) {
      LabelEmbeddingSpace space;
      space.labels = labels;
      for (std::size_t i = 0; i < num_labels; ++i) {
        space.matrices.emplace_back(m.context_dim(), hp.protos);
      }
      m.spaces.push_back(std::move(space));
    }
  }
  const std::size_t compressed = 10 * num_labels;
  m.head.compress.W = Matrix(compressed, m.head_input_dim());
  m.head.compress.b = Matrix(1, compressed);
  m.head.output.W = Matrix(num_labels, compressed);
  m.head.output.b = Matrix(1, num_labels);
  return m;
}

}  // namespace

Model build_model(const HyperParams& hp, const Vocabulary& vocab,
                  const std::vector<std::string>& labels, SeededRng& rng,
                  const std::string& pretrained_path, LoadReport* report) {
  Model m = make_skeleton(hp, vocab, labels);
  if (hp.contextual == ContextualKind::kBiLstm) {
    if (pretrained_path.empty()) {
      m.embedding = init_embeddings(vocab, hp.embed_dim, rng);
    } else {
      m.embedding = load_pretrained(pretrained_path, vocab, hp.embed_dim, rng, report);
    }
    m.embedding.trainable = !hp.freeze_embeddings;
    m.encoder = init_bilstm(hp.embed_dim, hp.hidden, rng);
  }
  if (!hp.no_label_layer) {
    for (std::size_t l = 0; l < hp.layer_count; ++l) {
      m.spaces[l] = init_label_space(labels, m.context_dim(), hp.protos, rng);
    }
  }
  m.head = init_head(labels.size(), m.head_input_dim(), 10 * labels.size(), rng);
  return m;
}

namespace {

template <typename ModelT, typename MatrixPtr>
std::vector<std::pair<std::string, MatrixPtr>> tensor_list(ModelT& m) {
  std::vector<std::pair<std::string, MatrixPtr>> out;
  if (m.hp.contextual == ContextualKind::kBiLstm) {
    out.emplace_back("embedding", &m.embedding.table);
    out.emplace_back("encoder.fwd.W", &m.encoder.fwd.W);
    out.emplace_back("encoder.fwd.U", &m.encoder.fwd.U);
    out.emplace_back("encoder.fwd.b", &m.encoder.fwd.b);
    out.emplace_back("encoder.bwd.W", &m.encoder.bwd.W);
    out.emplace_back("encoder.bwd.U", &m.encoder.bwd.U);
    out.emplace_back("encoder.bwd.b", &m.encoder.bwd.b);
  }
  for (std::size_t l = 0; l < m.spaces.size(); ++l) {
    for (std::size_t i = 0; i < m.spaces[l].matrices.size(); ++i) {
      out.emplace_back("labels." + std::to_string(l) + "." + std::to_string(i),
                       &m.spaces[l].matrices[i]);
    }
  }
  out.emplace_back("head.compress.W", &m.head.compress.W);
  out.emplace_back("head.compress.b", &m.head.compress.b);
  out.emplace_back("head.output.W", &m.head.output.W);
  out.emplace_back("head.output.b", &m.head.output.b);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, const Matrix*>> named_tensors(const Model& m) {
  return tensor_list<const Model, const Matrix*>(m);
}

std::vector<std::pair<std::string, Matrix*>> named_tensors_mutable(Model& m) {
  return tensor_list<Model, Matrix*>(m);
}

ParamRegistry trainable_params(Model& m) {
  ParamRegistry reg;
  for (auto& [name, tensor] : named_tensors_mutable(m)) {
    if (name == "embedding") {
      if (!m.embedding.trainable) continue;
      reg.embedding_slot = static_cast<std::ptrdiff_t>(reg.refs.size());
    }
    reg.refs.push_back({name, tensor});
  }
  return reg;
}

namespace {

void finish_forward(const Model& model, DocForward& fwd, std::size_t gold) {
  if (model.hp.no_label_layer) {
    fwd.features = pooled_baseline_forward(fwd.encoded[0], model.hp.pool, &fwd.pool);
  } else {
    auto [concat, records] = multi_layer_encode(fwd.encoded, model.spaces);
    fwd.features = std::move(concat);
    fwd.records = std::move(records);
  }
  fwd.head = head_forward(model.head, fwd.features);
  fwd.loss = cross_entropy_from_logits(fwd.head.logits, gold);
  fwd.predicted = static_cast<std::size_t>(
      std::max_element(fwd.head.probs.begin(), fwd.head.probs.end()) -
      fwd.head.probs.begin());
}

}  // namespace

std::vector<std::size_t> doc_indices(const Model& model, const Document& doc) {
  std::vector<std::size_t> indices;
  indices.reserve(std::min(doc.tokens.size(), model.hp.max_len));
  for (const auto& tok : doc.tokens) {
    if (indices.size() == model.hp.max_len) break;
    indices.push_back(model.vocab.index_of(tok));
  }
  if (indices.empty()) {
    throw UsageError("document '" + doc.id + "' has no tokens");
  }
  return indices;
}

DocForward model_forward(const Model& model, const Document& doc,
                         const PrecomputedStore* store, std::size_t gold) {
  if (gold >= model.num_labels()) {
    throw UsageError("model_forward: gold label index out of range");
  }
  if (model.hp.contextual == ContextualKind::kPrecomputed) {
    if (!store) {
      throw UsageError("model_forward: precomputed mode needs a store");
    }
    DocForward fwd;
    fwd.encoded = load_precomputed_contextual(*store, doc.id, model.hp.layer_count,
                                              model.hp.label_dim);
    finish_forward(model, fwd, gold);
    return fwd;
  }
  std::vector<std::size_t> indices = doc_indices(model, doc);
  std::vector<std::uint8_t> mask(indices.size(), 1);
  return model_forward_padded(model, std::move(indices), std::move(mask), gold);
}

DocForward model_forward_padded(const Model& model,
                                std::vector<std::size_t> indices,
                                std::vector<std::uint8_t> mask, std::size_t gold) {
  if (model.hp.contextual != ContextualKind::kBiLstm) {
    throw UsageError("model_forward_padded: only meaningful for the BiLSTM encoder");
  }
  if (gold >= model.num_labels()) {
    throw UsageError("model_forward_padded: gold label index out of range");
  }
  DocForward fwd;
  fwd.indices = std::move(indices);
  fwd.embedded = lookup(model.embedding, fwd.indices);
  fwd.encoded.push_back(bilstm_forward(model.encoder, fwd.embedded, mask));
  finish_forward(model, fwd, gold);
  return fwd;
}

GradSet make_gradset(const ParamRegistry& reg) {
  GradSet gs;
  gs.g.reserve(reg.refs.size());
  for (const auto& ref : reg.refs) {
    gs.g.emplace_back(ref.tensor->rows, ref.tensor->cols);
  }
  return gs;
}

void zero_gradset(GradSet& gs) {
  for (auto& m : gs.g) m.fill(0.0);
}

namespace {

std::size_t slot_of(const ParamRegistry& reg, const std::string& name) {
  for (std::size_t i = 0; i < reg.refs.size(); ++i) {
    if (reg.refs[i].name == name) return i;
  }
  throw UsageError("model_backward: no trainable tensor named " + name);
}

}  // namespace

void model_backward(const Model& model, const ParamRegistry& reg,
                    const DocForward& fwd, std::size_t gold, ExampleGrads& out) {
  out.dense.assign(reg.refs.size(), Matrix());
  out.embedding_rows.clear();

  HeadGrads hg = head_backward(model.head, fwd.head, gold);
  out.dense[slot_of(reg, "head.compress.W")] = std::move(hg.dW_compress);
  out.dense[slot_of(reg, "head.compress.b")] = std::move(hg.db_compress);
  out.dense[slot_of(reg, "head.output.W")] = std::move(hg.dW_output);
  out.dense[slot_of(reg, "head.output.b")] = std::move(hg.db_output);

  Matrix dcontextual;
  if (model.hp.no_label_layer) {
    dcontextual = pooled_baseline_backward(fwd.encoded[0], fwd.pool, hg.dinput);
  } else {
    const std::size_t block = model.num_labels() * model.context_dim();
    for (std::size_t l = 0; l < model.spaces.size(); ++l) {
      const std::span<const double> slice(hg.dinput.data() + l * block, block);
      LabelAttentionGrads lg =
          encode_all_backward(fwd.encoded[l], model.spaces[l], fwd.records[l], slice);
      for (std::size_t i = 0; i < lg.dlabels.size(); ++i) {
        out.dense[slot_of(reg, "labels." + std::to_string(l) + "." +
                                   std::to_string(i))] = std::move(lg.dlabels[i]);
      }
      if (l == 0) dcontextual = std::move(lg.dcontextual);
    }
  }

  if (model.hp.contextual == ContextualKind::kBiLstm) {
    BiLstmGrads bg = bilstm_backward(model.encoder, fwd.encoded[0], dcontextual);
    out.dense[slot_of(reg, "encoder.fwd.W")] = std::move(bg.fwd.dW);
    out.dense[slot_of(reg, "encoder.fwd.U")] = std::move(bg.fwd.dU);
    out.dense[slot_of(reg, "encoder.fwd.b")] = std::move(bg.fwd.db);
    out.dense[slot_of(reg, "encoder.bwd.W")] = std::move(bg.bwd.dW);
    out.dense[slot_of(reg, "encoder.bwd.U")] = std::move(bg.bwd.dU);
    out.dense[slot_of(reg, "encoder.bwd.b")] = std::move(bg.bwd.db);
    if (reg.embedding_slot >= 0) {
      out.embedding_rows = lookup_backward(bg.dembedded, fwd.indices);
    }
  }
}

void reduce_into(GradSet& gs, const ParamRegistry& reg, const ExampleGrads& eg) {
  for (std::size_t s = 0; s < reg.refs.size(); ++s) {
    if (static_cast<std::ptrdiff_t>(s) == reg.embedding_slot) {
      Matrix& acc = gs.g[s];
      for (const auto& [row, grad] : eg.embedding_rows) {
        double* dst = acc.data.data() + row * acc.cols;
        for (std::size_t k = 0; k < grad.size(); ++k) dst[k] += grad[k];
      }
      continue;
    }
    const Matrix& src = eg.dense[s];
    if (src.size() == 0) continue;
    Matrix& dst = gs.g[s];
    if (!dst.same_shape(src)) {
      throw ShapeError("reduce_into: gradient shape mismatch for " + reg.refs[s].name);
    }
    for (std::size_t k = 0; k < src.size(); ++k) dst.data[k] += src.data[k];
  }
}

}  // namespace lguided
