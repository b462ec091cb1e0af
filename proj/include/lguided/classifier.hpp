#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lguided/lstm.hpp"
#include "lguided/matrix.hpp"
#include "lguided/rng.hpp"

namespace lguided {

struct DenseLayer {
  Matrix W;  // out x in
  Matrix b;  // 1 x out
};

// W uniform in [-1/sqrt(in), +1/sqrt(in)], bias zero.
DenseLayer init_dense(std::size_t out, std::size_t in, SeededRng& rng);

// Compression affine + ReLU followed by an affine projection to label logits.
// compressed_dim defaults to 10 * L.
struct ClassifierHead {
  DenseLayer compress;  // compressed_dim x input_dim
  DenseLayer output;    // L x compressed_dim

  std::size_t input_dim() const { return compress.W.cols; }
  std::size_t compressed_dim() const { return compress.W.rows; }
  std::size_t num_labels() const { return output.W.rows; }
};

ClassifierHead init_head(std::size_t num_labels, std::size_t input_dim,
                         std::size_t compressed_dim, SeededRng& rng);

struct HeadCache {
  std::vector<double> input;
  std::vector<double> hidden_pre;  // before ReLU
  std::vector<double> hidden;      // after ReLU
  std::vector<double> logits;
  std::vector<double> probs;
};

// hidden = relu(W1 v + b1), probs = softmax(W2 hidden + b2).
HeadCache head_forward(const ClassifierHead& head, std::span<const double> v);

// -log(probs[gold]).
double cross_entropy(std::span<const double> probs, std::size_t gold);

// log-sum-exp(logits) - logits[gold]; the numerically fused form used for the
// training loss.
double cross_entropy_from_logits(std::span<const double> logits, std::size_t gold);

struct HeadGrads {
  Matrix dW_compress, db_compress;
  Matrix dW_output, db_output;
  std::vector<double> dinput;
};

// Exact gradients of cross_entropy(head_forward(v), gold); the logit-layer
// gradient is probs - onehot(gold).
HeadGrads head_backward(const ClassifierHead& head, const HeadCache& cache,
                        std::size_t gold);

enum class PoolMode { kMean, kMax, kLast };

struct PoolCache {
  PoolMode mode = PoolMode::kMean;
  std::size_t count = 0;                 // unmasked rows
  std::vector<std::size_t> argmax_row;   // kMax: winning row per dim
  std::size_t last_row = 0;              // kLast
};

// Pooled document vector for the no-label-layer baseline. Mean over unmasked
// rows by default; max and last-state pooling selectable.
std::vector<double> pooled_baseline_forward(const EncodedSequence& encoded,
                                            PoolMode mode, PoolCache* cache);

// Gradient of the pooled vector wrt the contextual rows.
Matrix pooled_baseline_backward(const EncodedSequence& encoded,
                                const PoolCache& cache,
                                std::span<const double> grad_pooled);

}  // namespace lguided
