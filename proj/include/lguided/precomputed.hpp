#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lguided/lstm.hpp"

namespace lguided {

// File-based provider of per-token contextual embeddings from an external
// encoder, consumed instead of the BiLSTM. Binary container:
//   magic "LGCX" | u32 version | u32 m_c | u32 layer_count | u32 doc_count
//   per doc: u32 id_len | id bytes | u32 K | layer_count * (K*m_c f32, LE, row-major)
struct PrecomputedDoc {
  std::string doc_id;
  std::vector<Matrix> layers;  // each K x m_c
};

struct PrecomputedStore {
  std::size_t context_dim = 0;
  std::size_t layer_count = 0;
  std::vector<PrecomputedDoc> docs;
  std::unordered_map<std::string, std::size_t> by_id;

  bool has(const std::string& doc_id) const { return by_id.count(doc_id) != 0; }
};

void write_precomputed(const std::string& path, std::size_t context_dim,
                       std::size_t layer_count,
                       const std::vector<PrecomputedDoc>& docs);

PrecomputedStore load_precomputed(const std::string& path);

// The stored matrices for one document as constant EncodedSequences (no
// backward), mask all-true over the stored K. Requesting more layers than the
// file holds raises UsageError; a store dimension different from the
// configured label embedding dimension raises ConfigError (the contextual and
// label embedding dimensions must be equal for cosine scoring).
std::vector<EncodedSequence> load_precomputed_contextual(
    const PrecomputedStore& store, const std::string& doc_id,
    std::size_t layers_requested, std::size_t label_dim);

}  // namespace lguided
