#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lguided {

// Token alphabet with two reserved entries: PAD (index 0, zero embedding,
// frozen) and UNK (index 1) for out-of-vocabulary tokens.
struct Vocabulary {
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  std::vector<std::string> index_to_token{kPadToken, kUnkToken};
  std::unordered_map<std::string, std::size_t> token_to_index{
      {kPadToken, kPad}, {kUnkToken, kUnk}};

  std::size_t size() const { return index_to_token.size(); }

  // Index of tok, or UNK when absent.
  std::size_t index_of(const std::string& tok) const {
    auto it = token_to_index.find(tok);
    return it == token_to_index.end() ? kUnk : it->second;
  }

  bool contains(const std::string& tok) const {
    return token_to_index.count(tok) != 0;
  }

  void add(const std::string& tok);
};

// Keeps every token with frequency >= min_count, ordered by descending
// frequency with lexicographic tie-break, after PAD and UNK. Deterministic.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus,
                            std::size_t min_count);

// Lowercase, punctuation characters split off as standalone tokens,
// whitespace-separated. Bytes >= 0x80 pass through untouched.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace lguided
