#include "lguided/embedding.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "lguided/error.hpp"

namespace lguided {

EmbeddingTable init_embeddings(const Vocabulary& vocab, std::size_t embed_dim,
                               SeededRng& rng) {
  EmbeddingTable t;
  t.table = init_uniform(rng, vocab.size(), embed_dim, 0.05);
  for (std::size_t j = 0; j < embed_dim; ++j) t.table(Vocabulary::kPad, j) = 0.0;
  return t;
}

EmbeddingTable load_pretrained(const std::string& path, const Vocabulary& vocab,
                               std::size_t embed_dim, SeededRng& rng,
                               LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pretrained vectors: " + path);

  // Random rows first so the draw sequence is independent of file content.
  EmbeddingTable t = init_embeddings(vocab, embed_dim, rng);

  LoadReport rep;
  rep.vocab_size = vocab.size();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rep.file_lines;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    std::size_t fields = 0;
    std::vector<double> vec(embed_dim);
    double value;
    while (ss >> value) {
      if (fields < embed_dim) vec[fields] = value;
      ++fields;
    }
    if (fields != embed_dim || !ss.eof()) {
      throw ParseError(path + ": line " + std::to_string(lineno) + ": expected " +
                       std::to_string(embed_dim) + " values after the token, got " +
                       std::to_string(fields));
    }
    if (!vocab.contains(tok)) continue;
    const std::size_t idx = vocab.token_to_index.at(tok);
    if (idx != Vocabulary::kPad) {
      for (std::size_t j = 0; j < embed_dim; ++j) t.table(idx, j) = vec[j];
      ++rep.matched;
    }
  }
  if (report) *report = rep;
  return t;
}

Matrix lookup(const EmbeddingTable& table, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), table.embed_dim());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= table.table.rows) {
      throw UsageError("lookup: index " + std::to_string(indices[j]) +
                       " out of range for vocabulary of " +
                       std::to_string(table.table.rows));
    }
    auto src = table.table.row(indices[j]);
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  return out;
}

std::vector<std::pair<std::size_t, std::vector<double>>> lookup_backward(
    const Matrix& grad_output, std::span<const std::size_t> indices) {
  if (grad_output.rows != indices.size()) {
    throw ShapeError("lookup_backward: gradient " + shape_str(grad_output) +
                     " against " + std::to_string(indices.size()) + " indices");
  }
  std::map<std::size_t, std::vector<double>> acc;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] == Vocabulary::kPad) continue;  // PAD row stays frozen
    auto [it, fresh] = acc.try_emplace(indices[j],
                                       std::vector<double>(grad_output.cols, 0.0));
    auto g = grad_output.row(j);
    for (std::size_t k = 0; k < grad_output.cols; ++k) it->second[k] += g[k];
  }
  return {acc.begin(), acc.end()};
}

}  // namespace lguided
