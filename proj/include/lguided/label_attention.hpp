#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lguided/lstm.hpp"
#include "lguided/matrix.hpp"
#include "lguided/rng.hpp"

namespace lguided {

// Each label is a matrix of `protos` prototype embeddings (label_dim x protos)
// rather than a single vector. label_dim must equal the contextual dimension
// so token/prototype cosines are defined.
struct LabelEmbeddingSpace {
  std::vector<std::string> labels;
  std::vector<Matrix> matrices;  // one label_dim x protos matrix per label

  std::size_t num_labels() const { return matrices.size(); }
  std::size_t label_dim() const { return matrices.empty() ? 0 : matrices[0].rows; }
  std::size_t protos() const { return matrices.empty() ? 0 : matrices[0].cols; }
};

// Prototype columns uniform in [-0.5/sqrt(label_dim), +0.5/sqrt(label_dim)].
LabelEmbeddingSpace init_label_space(const std::vector<std::string>& labels,
                                     std::size_t label_dim, std::size_t protos,
                                     SeededRng& rng);

// Everything recorded during attention, both for the backward pass and for
// export. Rows of `weights` restricted to unmasked positions sum to 1;
// masked positions carry exactly 0. raw_scores holds -inf at masked positions.
struct AttentionRecord {
  Matrix weights;     // L x K, normalized
  Matrix raw_scores;  // L x K, pre-softmax max-pooled cosines
  std::vector<std::vector<std::size_t>> winners;  // L x K winning prototype
};

struct LabelWiseEmbedding {
  std::vector<std::vector<double>> per_label;  // L vectors of context_dim
  std::vector<double> concatenated;            // L * context_dim, label order
};

// Max-pooled cosine compatibility of every position with one label matrix:
// scores[j] = max_p cos(contextual row j, column p), winners[j] = argmax
// (lowest index on ties). Masked positions get -inf.
std::pair<std::vector<double>, std::vector<std::size_t>> raw_score(
    const EncodedSequence& encoded, const Matrix& label_matrix);

// Softmax over unmasked positions only; masked positions exactly 0.
std::vector<double> normalize(std::span<const double> scores,
                              const std::vector<std::uint8_t>& mask);

// Weighted sum of contextual rows.
std::vector<double> label_wise_embedding(const EncodedSequence& encoded,
                                         std::span<const double> weights);

// Full label-guided encoding: per label score -> normalize -> weighted sum,
// concatenated in label order.
std::pair<LabelWiseEmbedding, AttentionRecord> encode_all(
    const EncodedSequence& encoded, const LabelEmbeddingSpace& space);

struct LabelAttentionGrads {
  Matrix dcontextual;           // K x context_dim
  std::vector<Matrix> dlabels;  // per label matrix
};

// Exact gradients of encode_all. Max-pooling routes into the winning
// prototype column only; the cosine gradient carries both the numerator and
// the norm terms; softmax uses its full Jacobian over unmasked positions.
LabelAttentionGrads encode_all_backward(const EncodedSequence& encoded,
                                        const LabelEmbeddingSpace& space,
                                        const AttentionRecord& record,
                                        std::span<const double> grad_concat);

// One encode_all per layer with that layer's own space, results concatenated
// in layer order (total dim = layers * L * context_dim).
std::pair<std::vector<double>, std::vector<AttentionRecord>> multi_layer_encode(
    const std::vector<EncodedSequence>& encoded_layers,
    const std::vector<LabelEmbeddingSpace>& spaces);

}  // namespace lguided
