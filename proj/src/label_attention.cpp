#include "lguided/label_attention.hpp"

#include <cmath>
#include <limits>

#include "lguided/error.hpp"

namespace lguided {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNormFloor = 1e-12;
}  // namespace

LabelEmbeddingSpace init_label_space(const std::vector<std::string>& labels,
                                     std::size_t label_dim, std::size_t protos,
                                     SeededRng& rng) {
  if (labels.empty()) throw UsageError("init_label_space: no labels");
  if (protos == 0) throw UsageError("init_label_space: need at least one prototype");
  const double scale = 0.5 / std::sqrt(static_cast<double>(label_dim));
  LabelEmbeddingSpace space;
  space.labels = labels;
  space.matrices.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    space.matrices.push_back(init_uniform(rng, label_dim, protos, scale));
  }
  return space;
}

std::pair<std::vector<double>, std::vector<std::size_t>> raw_score(
    const EncodedSequence& encoded, const Matrix& label_matrix) {
  if (encoded.contextual.cols != label_matrix.rows) {
    throw ConfigError("label-guided scoring: contextual dimension " +
                      std::to_string(encoded.contextual.cols) +
                      " differs from label embedding dimension " +
                      std::to_string(label_matrix.rows) +
                      "; the two must be equal for cosine similarity");
  }
  const std::size_t k_len = encoded.length();
  const std::size_t protos = label_matrix.cols;
  std::vector<double> scores(k_len, kNegInf);
  std::vector<std::size_t> winners(k_len, 0);
  std::vector<double> column(label_matrix.rows);
  for (std::size_t j = 0; j < k_len; ++j) {
    if (!encoded.mask[j]) continue;
    double best = kNegInf;
    std::size_t best_p = 0;
    for (std::size_t p = 0; p < protos; ++p) {
      for (std::size_t r = 0; r < label_matrix.rows; ++r) column[r] = label_matrix(r, p);
      const double s = cosine_similarity(encoded.contextual.row(j), column);
      if (s > best) {  // strict: ties keep the lowest prototype index
        best = s;
        best_p = p;
      }
    }
    scores[j] = best;
    winners[j] = best_p;
  }
  return {std::move(scores), std::move(winners)};
}

std::vector<double> normalize(std::span<const double> scores,
                              const std::vector<std::uint8_t>& mask) {
  if (scores.size() != mask.size()) {
    throw ShapeError("normalize: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(mask.size()) + " mask entries");
  }
  double mx = kNegInf;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (mask[j] && scores[j] > mx) mx = scores[j];
  }
  if (mx == kNegInf) {
    throw UsageError("normalize: sequence is fully masked");
  }
  std::vector<double> weights(scores.size(), 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!mask[j]) continue;
    weights[j] = std::exp(scores[j] - mx);
    sum += weights[j];
  }
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (mask[j]) weights[j] /= sum;
  }
  return weights;
}

std::vector<double> label_wise_embedding(const EncodedSequence& encoded,
                                         std::span<const double> weights) {
  if (weights.size() != encoded.length()) {
    throw ShapeError("label_wise_embedding: " + std::to_string(weights.size()) +
                     " weights vs " + std::to_string(encoded.length()) + " positions");
  }
  std::vector<double> v(encoded.contextual.cols, 0.0);
  for (std::size_t j = 0; j < encoded.length(); ++j) {
    const auto row = encoded.contextual.row(j);
    const double w = weights[j];
    for (std::size_t d = 0; d < v.size(); ++d) v[d] += w * row[d];
  }
  return v;
}

std::pair<LabelWiseEmbedding, AttentionRecord> encode_all(
    const EncodedSequence& encoded, const LabelEmbeddingSpace& space) {
  const std::size_t num_labels = space.num_labels();
  const std::size_t k_len = encoded.length();
  LabelWiseEmbedding lwe;
  AttentionRecord rec;
  rec.weights = Matrix(num_labels, k_len);
  rec.raw_scores = Matrix(num_labels, k_len);
  rec.winners.assign(num_labels, {});
  lwe.per_label.reserve(num_labels);
  lwe.concatenated.reserve(num_labels * encoded.contextual.cols);
  for (std::size_t i = 0; i < num_labels; ++i) {
    auto [scores, winners] = raw_score(encoded, space.matrices[i]);
    const std::vector<double> weights = normalize(scores, encoded.mask);
    std::vector<double> v = label_wise_embedding(encoded, weights);
    for (std::size_t j = 0; j < k_len; ++j) {
      rec.weights(i, j) = weights[j];
      rec.raw_scores(i, j) = scores[j];
    }
    rec.winners[i] = std::move(winners);
    lwe.concatenated.insert(lwe.concatenated.end(), v.begin(), v.end());
    lwe.per_label.push_back(std::move(v));
  }
  return {std::move(lwe), std::move(rec)};
}

LabelAttentionGrads encode_all_backward(const EncodedSequence& encoded,
                                        const LabelEmbeddingSpace& space,
                                        const AttentionRecord& record,
                                        std::span<const double> grad_concat) {
  const std::size_t num_labels = space.num_labels();
  const std::size_t k_len = encoded.length();
  const std::size_t dim = encoded.contextual.cols;
  if (record.weights.rows != num_labels || record.weights.cols != k_len) {
    throw UsageError("encode_all_backward: record does not match this forward");
  }
  if (grad_concat.size() != num_labels * dim) {
    throw ShapeError("encode_all_backward: upstream gradient has length " +
                     std::to_string(grad_concat.size()) + ", expected " +
                     std::to_string(num_labels * dim));
  }

  LabelAttentionGrads g;
  g.dcontextual = Matrix(k_len, dim);
  g.dlabels.reserve(num_labels);
  for (std::size_t i = 0; i < num_labels; ++i) {
    g.dlabels.emplace_back(space.matrices[i].rows, space.matrices[i].cols);
  }

  std::vector<double> dweights(k_len);
  for (std::size_t i = 0; i < num_labels; ++i) {
    const std::span<const double> gi = grad_concat.subspan(i * dim, dim);
    const Matrix& label_matrix = space.matrices[i];

    // Through the weighted sum: v_i = sum_j w_ij * e_j.
    double weighted_dot = 0.0;
    for (std::size_t j = 0; j < k_len; ++j) {
      if (!encoded.mask[j]) {
        dweights[j] = 0.0;
        continue;
      }
      const auto row = encoded.contextual.row(j);
      const double w = record.weights(i, j);
      dweights[j] = dot(gi, row);
      weighted_dot += w * dweights[j];
      double* drow = g.dcontextual.data.data() + j * dim;
      for (std::size_t d = 0; d < dim; ++d) drow[d] += w * gi[d];
    }

    // Softmax Jacobian over unmasked positions, then the cosine of the
    // winning prototype column only.
    for (std::size_t j = 0; j < k_len; ++j) {
      if (!encoded.mask[j]) continue;
      const double draw = record.weights(i, j) * (dweights[j] - weighted_dot);
      if (draw == 0.0) continue;
      const std::size_t p = record.winners[i][j];
      const auto a = encoded.contextual.row(j);
      double na2 = 0.0, nb2 = 0.0, ab = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double bv = label_matrix(d, p);
        na2 += a[d] * a[d];
        nb2 += bv * bv;
        ab += a[d] * bv;
      }
      const double na = std::sqrt(na2);
      const double nb = std::sqrt(nb2);
      if (na < kNormFloor || nb < kNormFloor) continue;  // cosine pinned to 0
      const double inv = 1.0 / (na * nb);
      const double cosv = ab * inv;
      double* drow = g.dcontextual.data.data() + j * dim;
      Matrix& dlabel = g.dlabels[i];
      for (std::size_t d = 0; d < dim; ++d) {
        const double bv = label_matrix(d, p);
        drow[d] += draw * (bv * inv - cosv * a[d] / na2);
        dlabel(d, p) += draw * (a[d] * inv - cosv * bv / nb2);
      }
    }
  }
  return g;
}

std::pair<std::vector<double>, std::vector<AttentionRecord>> multi_layer_encode(
    const std::vector<EncodedSequence>& encoded_layers,
    const std::vector<LabelEmbeddingSpace>& spaces) {
  if (encoded_layers.size() != spaces.size()) {
    throw ConfigError("multi_layer_encode: " + std::to_string(encoded_layers.size()) +
                      " encoded layers vs " + std::to_string(spaces.size()) +
                      " label spaces");
  }
  if (encoded_layers.empty()) {
    throw UsageError("multi_layer_encode: no layers");
  }
  for (std::size_t l = 1; l < spaces.size(); ++l) {
    if (spaces[l].num_labels() != spaces[0].num_labels()) {
      throw ConfigError("multi_layer_encode: layer label counts differ");
    }
  }
  std::vector<double> concat;
  std::vector<AttentionRecord> records;
  records.reserve(spaces.size());
  for (std::size_t l = 0; l < spaces.size(); ++l) {
    auto [lwe, rec] = encode_all(encoded_layers[l], spaces[l]);
    concat.insert(concat.end(), lwe.concatenated.begin(), lwe.concatenated.end());
    records.push_back(std::move(rec));
  }
  return {std::move(concat), std::move(records)};
}

}  // namespace lguided
