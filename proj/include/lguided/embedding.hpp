#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lguided/matrix.hpp"
#include "lguided/rng.hpp"
#include "lguided/vocab.hpp"

namespace lguided {

// |V| x embed_dim table. Row 0 (PAD) is all-zero and never receives gradient.
struct EmbeddingTable {
  Matrix table;
  bool trainable = true;

  std::size_t embed_dim() const { return table.cols; }
};

struct LoadReport {
  std::size_t matched = 0;      // vocab tokens found in the vector file
  std::size_t vocab_size = 0;   // including PAD/UNK
  std::size_t file_lines = 0;
};

// All rows uniform in [-0.05, 0.05] except PAD (zero).
EmbeddingTable init_embeddings(const Vocabulary& vocab, std::size_t embed_dim,
                               SeededRng& rng);

// Reads GloVe-style text (`token v1 .. v_d` per line). In-file vocab rows are
// copied verbatim; missing tokens (UNK included) fall back to U(-0.05, 0.05);
// PAD stays zero. Wrong arity raises ParseError with the line number.
EmbeddingTable load_pretrained(const std::string& path, const Vocabulary& vocab,
                               std::size_t embed_dim, SeededRng& rng,
                               LoadReport* report = nullptr);

// Row j of the result is table row indices[j]. Index >= |V| raises UsageError.
Matrix lookup(const EmbeddingTable& table, std::span<const std::size_t> indices);

// Sparse row-gradient accumulation for lookup: each (row, grad) pair carries
// the sum of grad_output rows that hit that table row, pairs sorted by row.
// PAD never appears (its gradient is pinned to zero).
std::vector<std::pair<std::size_t, std::vector<double>>> lookup_backward(
    const Matrix& grad_output, std::span<const std::size_t> indices);

}  // namespace lguided
