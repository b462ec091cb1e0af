#include "lguided/synth.hpp"

#include <cmath>
#include <set>

#include "lguided/error.hpp"

namespace lguided {

std::size_t SynthSpec::pool_step() const {
  const double step = static_cast<double>(vocab_per_class) * (1.0 - overlap);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(step)));
}

std::vector<std::string> SynthSpec::class_pool(std::size_t label) const {
  std::vector<std::string> pool;
  pool.reserve(vocab_per_class);
  const std::size_t start = label * pool_step();
  for (std::size_t r = 0; r < vocab_per_class; ++r) {
    pool.push_back("kw" + std::to_string(start + r));
  }
  return pool;
}

Dataset synth_corpus(SeededRng& rng, const SynthSpec& spec) {
  if (spec.num_labels < 2) throw UsageError("synth_corpus: need at least 2 classes");
  if (spec.docs_per_class == 0 || spec.vocab_per_class == 0 || spec.doc_len == 0) {
    throw UsageError("synth_corpus: docs_per_class, vocab_per_class and doc_len "
                     "must be positive");
  }
  if (spec.noise_rate < 0.0 || spec.noise_rate >= 1.0) {
    throw UsageError("synth_corpus: noise_rate must be in [0, 1)");
  }
  if (spec.overlap < 0.0 || spec.overlap >= 1.0) {
    throw UsageError("synth_corpus: overlap must be in [0, 1)");
  }

  std::vector<std::vector<std::string>> pools;
  pools.reserve(spec.num_labels);
  for (std::size_t c = 0; c < spec.num_labels; ++c) pools.push_back(spec.class_pool(c));
  const std::size_t filler_size = 2 * spec.vocab_per_class;
  std::vector<std::string> filler;
  filler.reserve(filler_size);
  for (std::size_t i = 0; i < filler_size; ++i) {
    filler.push_back("filler" + std::to_string(i));
  }

  auto make_doc = [&](std::size_t c, const std::string& id) {
    Document doc;
    doc.id = id;
    doc.label = "class" + std::to_string(c);
    doc.tokens.reserve(spec.doc_len);
    for (std::size_t j = 0; j < spec.doc_len; ++j) {
      if (rng.uniform() < spec.noise_rate) {
        doc.tokens.push_back(filler[rng.uniform_index(filler_size)]);
      } else {
        doc.tokens.push_back(pools[c][rng.uniform_index(spec.vocab_per_class)]);
      }
    }
    return doc;
  };

  Dataset data;
  data.provenance = "synth(L=" + std::to_string(spec.num_labels) +
                    ",docs=" + std::to_string(spec.docs_per_class) +
                    ",noise=" + std::to_string(spec.noise_rate) +
                    ",overlap=" + std::to_string(spec.overlap) +
                    ",seed=" + std::to_string(rng.seed()) + ")";
  const std::size_t test_per_class = std::max<std::size_t>(1, spec.docs_per_class / 5);
  for (std::size_t c = 0; c < spec.num_labels; ++c) {
    for (std::size_t n = 0; n < spec.docs_per_class; ++n) {
      data.train.push_back(
          make_doc(c, "train-" + std::to_string(c) + "-" + std::to_string(n)));
    }
  }
  for (std::size_t c = 0; c < spec.num_labels; ++c) {
    for (std::size_t n = 0; n < test_per_class; ++n) {
      data.test.push_back(
          make_doc(c, "test-" + std::to_string(c) + "-" + std::to_string(n)));
    }
  }
  std::set<std::string> label_set;
  for (const auto& doc : data.train) label_set.insert(doc.label);
  data.labels.assign(label_set.begin(), label_set.end());
  return data;
}

}  // namespace lguided
