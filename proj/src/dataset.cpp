#include "lguided/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "lguided/error.hpp"
#include "lguided/vocab.hpp"

namespace lguided {

std::size_t Dataset::label_index(const std::string& name) const {
  auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) throw DataError("unknown label '" + name + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

std::vector<Document> load_tsv_split(const std::string& path,
                                     const std::string& id_prefix,
                                     std::size_t max_len) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ": line " + std::to_string(lineno) +
                       ": expected `label<TAB>text`");
    }
    Document doc;
    doc.id = id_prefix + "-" + std::to_string(lineno);
    doc.label = line.substr(0, tab);
    if (doc.label.empty()) {
      throw ParseError(path + ": line " + std::to_string(lineno) + ": empty label");
    }
    doc.tokens = tokenize(std::string_view(line).substr(tab + 1));
    if (doc.tokens.empty()) {
      throw ParseError(path + ": line " + std::to_string(lineno) +
                       ": no tokens after preprocessing");
    }
    if (doc.tokens.size() > max_len) doc.tokens.resize(max_len);
    docs.push_back(std::move(doc));
  }
  return docs;
}

Dataset load_dataset(const std::string& dir, std::size_t max_len) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  Dataset data;
  data.provenance = dir;
  data.train = load_tsv_split((base / "train.tsv").string(), "train", max_len);
  data.test = load_tsv_split((base / "test.tsv").string(), "test", max_len);
  if (fs::exists(base / "dev.tsv")) {
    data.dev = load_tsv_split((base / "dev.tsv").string(), "dev", max_len);
  }
  if (data.train.empty()) throw DataError(dir + ": train split is empty");

  std::set<std::string> label_set;
  for (const auto& doc : data.train) label_set.insert(doc.label);
  data.labels.assign(label_set.begin(), label_set.end());

  for (const auto* split : {&data.test, &data.dev}) {
    for (const auto& doc : *split) {
      if (!label_set.count(doc.label)) {
        throw DataError(dir + ": label '" + doc.label +
                        "' appears outside the train split; the train split "
                        "must cover every label");
      }
    }
  }
  return data;
}

void write_tsv_split(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const auto& doc : docs) {
    out << doc.label << '\t';
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) out << ' ';
      out << doc.tokens[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("short write on: " + path);
}

}  // namespace lguided
