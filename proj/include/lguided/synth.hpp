#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lguided/dataset.hpp"
#include "lguided/rng.hpp"

namespace lguided {

// Synthetic keyword corpus. Class c draws (1 - noise_rate) of its tokens from
// its keyword pool and the rest from a shared filler pool, so documents are
// separable by keyword statistics when noise is low. `overlap` shares that
// fraction of each class's pool with the next class to make tasks harder.
//
// Token naming is part of the contract so independent checkers can rebuild
// the pools: class c's pool is kw{c*step + r} for r in [0, vocab_per_class)
// with step = max(1, round(vocab_per_class * (1 - overlap))); the shared pool
// is filler{0..2*vocab_per_class-1}. Labels are class{c}; train ids
// train-{c}-{n}, test ids test-{c}-{n}.
struct SynthSpec {
  std::size_t num_labels = 2;
  std::size_t docs_per_class = 50;   // train split; test gets 1/5 of this
  std::size_t vocab_per_class = 20;
  std::size_t doc_len = 20;
  double noise_rate = 0.0;  // in [0, 1)
  double overlap = 0.0;     // in [0, 1)

  std::size_t pool_step() const;
  // Keyword pool of one class, by the naming rule above.
  std::vector<std::string> class_pool(std::size_t label) const;
};

Dataset synth_corpus(SeededRng& rng, const SynthSpec& spec);

}  // namespace lguided
