#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "lguided/dataset.hpp"
#include "lguided/matrix.hpp"
#include "lguided/model.hpp"
#include "lguided/rng.hpp"
#include "lguided/vocab.hpp"

namespace testsup {

using namespace lguided;

inline Matrix random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data) x = rng.uniform(lo, hi);
  return m;
}

inline std::vector<double> random_vector(SeededRng& rng, std::size_t n,
                                         double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           (tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str(const std::string& child = "") const {
    return child.empty() ? path.string() : (path / child).string();
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

// Toy configuration used by the composed-model gradient tests.
inline HyperParams toy_hp(std::uint64_t seed) {
  HyperParams hp;
  hp.seed = seed;
  hp.embed_dim = 3;
  hp.hidden = 3;
  hp.label_dim = 6;
  hp.protos = 2;
  hp.batch_size = 2;
  hp.epochs = 1;
  return hp;
}

inline Vocabulary toy_vocab() {
  Vocabulary v;
  for (const char* tok : {"alpha", "beta", "gamma", "delta", "omega"}) v.add(tok);
  return v;
}

inline Document toy_doc() {
  return {"doc0", {"alpha", "beta", "gamma", "delta"}, "pos"};
}

inline Model toy_model(std::uint64_t seed) {
  SeededRng rng(seed);
  return build_model(toy_hp(seed), toy_vocab(), {"neg", "pos"}, rng);
}

// The 2-document separable fixture used by the overfit oracle.
inline Dataset two_doc_dataset() {
  Dataset d;
  d.train = {{"train-1", {"good", "great", "fun"}, "pos"},
             {"train-2", {"bad", "awful", "boring"}, "neg"}};
  d.test = d.train;
  d.test[0].id = "test-1";
  d.test[1].id = "test-2";
  d.labels = {"neg", "pos"};
  return d;
}

}  // namespace testsup
