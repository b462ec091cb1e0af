#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lguided/matrix.hpp"
#include "lguided/rng.hpp"

namespace lguided {

// One LSTM cell. Gate blocks are stacked in the fixed order
// [input, forget, output, candidate], each of size `hidden`.
struct LstmParams {
  Matrix W;  // 4h x input_dim
  Matrix U;  // 4h x h
  Matrix b;  // 1 x 4h

  std::size_t hidden() const { return U.cols; }
  std::size_t input_dim() const { return W.cols; }
};

// Uniform init in [-1/sqrt(h), +1/sqrt(h)], forget-gate bias 1.0.
LstmParams init_lstm(std::size_t input_dim, std::size_t hidden, SeededRng& rng);

struct BiLstm {
  LstmParams fwd;
  LstmParams bwd;

  std::size_t hidden() const { return fwd.hidden(); }
  std::size_t out_dim() const { return 2 * fwd.hidden(); }
};

BiLstm init_bilstm(std::size_t input_dim, std::size_t hidden, SeededRng& rng);

// Per-timestep activations retained for backpropagation through time.
struct LstmStepCache {
  std::vector<double> gate_i, gate_f, gate_o, gate_g;
  std::vector<double> cell, tanh_cell;
  std::vector<double> h_prev, c_prev;
};

struct BiLstmCache {
  Matrix embedded;  // input copy, K x input_dim
  std::vector<LstmStepCache> fwd;  // index = timestep
  std::vector<LstmStepCache> bwd;
};

// Contextual embeddings for one document. Masked (padding) rows are all-zero.
// `cache` is present only when produced by bilstm_forward.
struct EncodedSequence {
  Matrix contextual;               // K x out_dim
  std::vector<std::uint8_t> mask;  // 1 = real token, 0 = padding
  std::shared_ptr<const BiLstmCache> cache;

  std::size_t length() const { return mask.size(); }
  std::size_t unmasked_count() const;
};

// Row j is [forward hidden at j || backward hidden at j]. States start at
// zero; masked steps pass state through unchanged and emit a zero row.
EncodedSequence bilstm_forward(const BiLstm& params, const Matrix& embedded,
                               const std::vector<std::uint8_t>& mask);

struct LstmGrads {
  Matrix dW, dU, db;
};

struct BiLstmGrads {
  LstmGrads fwd, bwd;
  Matrix dembedded;  // K x input_dim
};

// Exact BPTT through bilstm_forward. grad_contextual rows at masked
// positions are ignored (those outputs are constants).
BiLstmGrads bilstm_backward(const BiLstm& params, const EncodedSequence& seq,
                            const Matrix& grad_contextual);

}  // namespace lguided
