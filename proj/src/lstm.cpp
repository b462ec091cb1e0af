#include "lguided/lstm.hpp"

#include <cmath>

#include "lguided/error.hpp"

namespace lguided {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

LstmParams init_lstm(std::size_t input_dim, std::size_t hidden, SeededRng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmParams p;
  p.W = init_uniform(rng, 4 * hidden, input_dim, scale);
  p.U = init_uniform(rng, 4 * hidden, hidden, scale);
  p.b = init_uniform(rng, 1, 4 * hidden, scale);
  // Forget-gate bias at 1 keeps early cell states alive.
  for (std::size_t k = hidden; k < 2 * hidden; ++k) p.b(0, k) = 1.0;
  return p;
}

BiLstm init_bilstm(std::size_t input_dim, std::size_t hidden, SeededRng& rng) {
  BiLstm cells;
  cells.fwd = init_lstm(input_dim, hidden, rng);
  cells.bwd = init_lstm(input_dim, hidden, rng);
  return cells;
}

std::size_t EncodedSequence::unmasked_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

namespace {

// One direction over the sequence. Visit order is 0..K-1 for the forward
// cell, K-1..0 for the backward cell; caches are indexed by timestep.
void run_direction(const LstmParams& cell, const Matrix& embedded,
                   const std::vector<std::uint8_t>& mask, bool forward,
                   Matrix& out, std::size_t out_col_offset,
                   std::vector<LstmStepCache>& caches) {
  const std::size_t k_len = embedded.rows;
  const std::size_t h = cell.hidden();
  caches.assign(k_len, {});
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  for (std::size_t step = 0; step < k_len; ++step) {
    const std::size_t t = forward ? step : k_len - 1 - step;
    LstmStepCache& c = caches[t];
    c.h_prev = hs;
    c.c_prev = cs;
    if (!mask[t]) continue;  // padding: state passes through, output row stays zero

    std::vector<double> pre = matvec(cell.W, embedded.row(t));
    const std::vector<double> rec = matvec(cell.U, hs);
    for (std::size_t i = 0; i < 4 * h; ++i) pre[i] += rec[i] + cell.b(0, i);

    c.gate_i.resize(h);
    c.gate_f.resize(h);
    c.gate_o.resize(h);
    c.gate_g.resize(h);
    c.cell.resize(h);
    c.tanh_cell.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
      c.gate_i[i] = sigmoid(pre[i]);
      c.gate_f[i] = sigmoid(pre[h + i]);
      c.gate_o[i] = sigmoid(pre[2 * h + i]);
      c.gate_g[i] = std::tanh(pre[3 * h + i]);
      cs[i] = c.gate_f[i] * c.c_prev[i] + c.gate_i[i] * c.gate_g[i];
      c.cell[i] = cs[i];
      c.tanh_cell[i] = std::tanh(cs[i]);
      hs[i] = c.gate_o[i] * c.tanh_cell[i];
      out(t, out_col_offset + i) = hs[i];
    }
  }
}

void backprop_direction(const LstmParams& cell, const BiLstmCache& cache,
                        const std::vector<LstmStepCache>& steps,
                        const std::vector<std::uint8_t>& mask, bool forward,
                        const Matrix& grad_contextual, std::size_t col_offset,
                        LstmGrads& g, Matrix& dembedded) {
  const std::size_t k_len = cache.embedded.rows;
  const std::size_t h = cell.hidden();
  std::vector<double> dh(h, 0.0), dc(h, 0.0);
  std::vector<double> dpre(4 * h, 0.0);
  // Reverse of the visit order.
  for (std::size_t step = k_len; step-- > 0;) {
    const std::size_t t = forward ? step : k_len - 1 - step;
    if (!mask[t]) continue;  // identity step: dh, dc flow through unchanged
    const LstmStepCache& c = steps[t];
    for (std::size_t i = 0; i < h; ++i) {
      const double dh_i = dh[i] + grad_contextual(t, col_offset + i);
      const double d_o = dh_i * c.tanh_cell[i];
      const double dc_i = dc[i] + dh_i * c.gate_o[i] * (1.0 - c.tanh_cell[i] * c.tanh_cell[i]);
      const double d_f = dc_i * c.c_prev[i];
      const double d_i = dc_i * c.gate_g[i];
      const double d_g = dc_i * c.gate_i[i];
      dpre[i] = d_i * c.gate_i[i] * (1.0 - c.gate_i[i]);
      dpre[h + i] = d_f * c.gate_f[i] * (1.0 - c.gate_f[i]);
      dpre[2 * h + i] = d_o * c.gate_o[i] * (1.0 - c.gate_o[i]);
      dpre[3 * h + i] = d_g * (1.0 - c.gate_g[i] * c.gate_g[i]);
      dc[i] = dc_i * c.gate_f[i];
    }
    add_outer(g.dW, dpre, cache.embedded.row(t));
    add_outer(g.dU, dpre, c.h_prev);
    for (std::size_t i = 0; i < 4 * h; ++i) g.db(0, i) += dpre[i];
    const std::vector<double> dx = matvec_transposed(cell.W, dpre);
    for (std::size_t i = 0; i < cache.embedded.cols; ++i) dembedded(t, i) += dx[i];
    dh = matvec_transposed(cell.U, dpre);
  }
}

}  // namespace

EncodedSequence bilstm_forward(const BiLstm& params, const Matrix& embedded,
                               const std::vector<std::uint8_t>& mask) {
  if (embedded.cols != params.fwd.input_dim()) {
    throw ShapeError("bilstm_forward: input " + shape_str(embedded) +
                     " against cell input dim " +
                     std::to_string(params.fwd.input_dim()));
  }
  if (mask.size() != embedded.rows) {
    throw ShapeError("bilstm_forward: mask length " + std::to_string(mask.size()) +
                     " against " + std::to_string(embedded.rows) + " rows");
  }
  auto cache = std::make_shared<BiLstmCache>();
  cache->embedded = embedded;

  EncodedSequence seq;
  seq.contextual = Matrix(embedded.rows, params.out_dim());
  seq.mask = mask;
  run_direction(params.fwd, embedded, mask, /*forward=*/true, seq.contextual, 0,
                cache->fwd);
  run_direction(params.bwd, embedded, mask, /*forward=*/false, seq.contextual,
                params.hidden(), cache->bwd);
  seq.cache = std::move(cache);
  return seq;
}

BiLstmGrads bilstm_backward(const BiLstm& params, const EncodedSequence& seq,
                            const Matrix& grad_contextual) {
  if (!seq.cache) {
    throw UsageError("bilstm_backward: sequence carries no forward cache");
  }
  if (!grad_contextual.same_shape(seq.contextual)) {
    throw ShapeError("bilstm_backward: gradient " + shape_str(grad_contextual) +
                     " against output " + shape_str(seq.contextual));
  }
  const BiLstmCache& cache = *seq.cache;
  const std::size_t h = params.hidden();
  BiLstmGrads g;
  for (LstmGrads* d : {&g.fwd, &g.bwd}) {
    const LstmParams& cell = d == &g.fwd ? params.fwd : params.bwd;
    d->dW = Matrix(cell.W.rows, cell.W.cols);
    d->dU = Matrix(cell.U.rows, cell.U.cols);
    d->db = Matrix(1, cell.b.cols);
  }
  g.dembedded = Matrix(cache.embedded.rows, cache.embedded.cols);
  backprop_direction(params.fwd, cache, cache.fwd, seq.mask, /*forward=*/true,
                     grad_contextual, 0, g.fwd, g.dembedded);
  backprop_direction(params.bwd, cache, cache.bwd, seq.mask, /*forward=*/false,
                     grad_contextual, h, g.bwd, g.dembedded);
  return g;
}

}  // namespace lguided
