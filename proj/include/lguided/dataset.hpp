#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lguided {

struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::string label;
};

struct Dataset {
  std::vector<Document> train;
  std::vector<Document> dev;   // may be empty
  std::vector<Document> test;
  std::vector<std::string> labels;  // sorted, derived from the train split
  std::string provenance;

  std::size_t num_labels() const { return labels.size(); }
  std::size_t label_index(const std::string& name) const;  // DataError if unknown
};

// Reads `train.tsv` and `test.tsv` (plus `dev.tsv` when present) from dir.
// Each line is `label<TAB>text`; text is tokenized (lowercase, punctuation
// split) and truncated to max_len tokens. Labels are taken from the train
// split; a test/dev label outside that set raises DataError.
Dataset load_dataset(const std::string& dir, std::size_t max_len);

// Single split from one TSV file; used by load_dataset and fixtures.
std::vector<Document> load_tsv_split(const std::string& path,
                                     const std::string& id_prefix,
                                     std::size_t max_len);

void write_tsv_split(const std::string& path, const std::vector<Document>& docs);

}  // namespace lguided
