#include "lguided/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "lguided/error.hpp"

namespace lguided {

void Vocabulary::add(const std::string& tok) {
  if (token_to_index.count(tok)) return;
  token_to_index.emplace(tok, index_to_token.size());
  index_to_token.push_back(tok);
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus,
                            std::size_t min_count) {
  if (corpus.empty()) throw UsageError("build_vocabulary: empty corpus");
  // std::map keeps ties in lexicographic order for free.
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus)
    for (const auto& tok : doc) ++freq[tok];

  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  for (const auto& [tok, count] : items) {
    if (count >= min_count) vocab.add(tok);
  }
  return vocab;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

}  // namespace lguided
