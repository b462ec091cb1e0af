#include "lguided/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "lguided/error.hpp"

namespace lguided {

DenseLayer init_dense(std::size_t out, std::size_t in, SeededRng& rng) {
  DenseLayer layer;
  layer.W = init_uniform(rng, out, in, 1.0 / std::sqrt(static_cast<double>(in)));
  layer.b = Matrix(1, out);
  return layer;
}

ClassifierHead init_head(std::size_t num_labels, std::size_t input_dim,
                         std::size_t compressed_dim, SeededRng& rng) {
  ClassifierHead head;
  head.compress = init_dense(compressed_dim, input_dim, rng);
  head.output = init_dense(num_labels, compressed_dim, rng);
  return head;
}

HeadCache head_forward(const ClassifierHead& head, std::span<const double> v) {
  if (v.size() != head.input_dim()) {
    throw ShapeError("head_forward: input length " + std::to_string(v.size()) +
                     " against compress layer " + shape_str(head.compress.W));
  }
  HeadCache cache;
  cache.input.assign(v.begin(), v.end());
  cache.hidden_pre = matvec(head.compress.W, v);
  for (std::size_t i = 0; i < cache.hidden_pre.size(); ++i) {
    cache.hidden_pre[i] += head.compress.b(0, i);
  }
  cache.hidden = cache.hidden_pre;
  for (double& x : cache.hidden) x = x > 0.0 ? x : 0.0;
  cache.logits = matvec(head.output.W, cache.hidden);
  for (std::size_t i = 0; i < cache.logits.size(); ++i) {
    cache.logits[i] += head.output.b(0, i);
  }
  cache.probs = softmax(cache.logits);
  return cache;
}

double cross_entropy(std::span<const double> probs, std::size_t gold) {
  if (gold >= probs.size()) {
    throw UsageError("cross_entropy: gold index " + std::to_string(gold) +
                     " out of range for " + std::to_string(probs.size()) + " classes");
  }
  return -std::log(probs[gold]);
}

double cross_entropy_from_logits(std::span<const double> logits, std::size_t gold) {
  if (gold >= logits.size()) {
    throw UsageError("cross_entropy_from_logits: gold index " + std::to_string(gold) +
                     " out of range for " + std::to_string(logits.size()) + " classes");
  }
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return std::log(sum) + mx - logits[gold];
}

HeadGrads head_backward(const ClassifierHead& head, const HeadCache& cache,
                        std::size_t gold) {
  if (cache.probs.size() != head.num_labels() ||
      cache.input.size() != head.input_dim()) {
    throw UsageError("head_backward: cache does not match this head");
  }
  if (gold >= cache.probs.size()) {
    throw UsageError("head_backward: gold index out of range");
  }
  HeadGrads g;
  // Fused softmax + cross-entropy at the logit layer.
  std::vector<double> dlogits = cache.probs;
  dlogits[gold] -= 1.0;

  g.dW_output = Matrix(head.output.W.rows, head.output.W.cols);
  add_outer(g.dW_output, dlogits, cache.hidden);
  g.db_output = Matrix(1, dlogits.size());
  std::copy(dlogits.begin(), dlogits.end(), g.db_output.data.begin());

  std::vector<double> dhidden = matvec_transposed(head.output.W, dlogits);
  for (std::size_t i = 0; i < dhidden.size(); ++i) {
    if (cache.hidden_pre[i] <= 0.0) dhidden[i] = 0.0;  // ReLU routing
  }
  g.dW_compress = Matrix(head.compress.W.rows, head.compress.W.cols);
  add_outer(g.dW_compress, dhidden, cache.input);
  g.db_compress = Matrix(1, dhidden.size());
  std::copy(dhidden.begin(), dhidden.end(), g.db_compress.data.begin());

  g.dinput = matvec_transposed(head.compress.W, dhidden);
  return g;
}

std::vector<double> pooled_baseline_forward(const EncodedSequence& encoded,
                                            PoolMode mode, PoolCache* cache) {
  const std::size_t dim = encoded.contextual.cols;
  const std::size_t count = encoded.unmasked_count();
  if (count == 0) throw UsageError("pooled_baseline_forward: fully masked sequence");
  PoolCache local;
  local.mode = mode;
  local.count = count;
  std::vector<double> out(dim, 0.0);
  switch (mode) {
    case PoolMode::kMean: {
      for (std::size_t j = 0; j < encoded.length(); ++j) {
        if (!encoded.mask[j]) continue;
        const auto row = encoded.contextual.row(j);
        for (std::size_t d = 0; d < dim; ++d) out[d] += row[d];
      }
      for (double& x : out) x /= static_cast<double>(count);
      break;
    }
    case PoolMode::kMax: {
      local.argmax_row.assign(dim, 0);
      bool first = true;
      for (std::size_t j = 0; j < encoded.length(); ++j) {
        if (!encoded.mask[j]) continue;
        const auto row = encoded.contextual.row(j);
        for (std::size_t d = 0; d < dim; ++d) {
          if (first || row[d] > out[d]) {
            out[d] = row[d];
            local.argmax_row[d] = j;
          }
        }
        first = false;
      }
      break;
    }
    case PoolMode::kLast: {
      for (std::size_t j = encoded.length(); j-- > 0;) {
        if (encoded.mask[j]) {
          local.last_row = j;
          const auto row = encoded.contextual.row(j);
          std::copy(row.begin(), row.end(), out.begin());
          break;
        }
      }
      break;
    }
  }
  if (cache) *cache = std::move(local);
  return out;
}

Matrix pooled_baseline_backward(const EncodedSequence& encoded,
                                const PoolCache& cache,
                                std::span<const double> grad_pooled) {
  const std::size_t dim = encoded.contextual.cols;
  if (grad_pooled.size() != dim) {
    throw ShapeError("pooled_baseline_backward: gradient length " +
                     std::to_string(grad_pooled.size()) + ", expected " +
                     std::to_string(dim));
  }
  Matrix g(encoded.length(), dim);
  switch (cache.mode) {
    case PoolMode::kMean: {
      const double inv = 1.0 / static_cast<double>(cache.count);
      for (std::size_t j = 0; j < encoded.length(); ++j) {
        if (!encoded.mask[j]) continue;
        for (std::size_t d = 0; d < dim; ++d) g(j, d) = grad_pooled[d] * inv;
      }
      break;
    }
    case PoolMode::kMax: {
      for (std::size_t d = 0; d < dim; ++d) {
        g(cache.argmax_row[d], d) += grad_pooled[d];
      }
      break;
    }
    case PoolMode::kLast: {
      for (std::size_t d = 0; d < dim; ++d) g(cache.last_row, d) = grad_pooled[d];
      break;
    }
  }
  return g;
}

}  // namespace lguided
