#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lguided/label_attention.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lguided;
using oracles::make_encoded;
using testsup::random_matrix;

namespace {

EncodedSequence random_encoded(SeededRng& rng, std::size_t k, std::size_t dim,
                               std::size_t masked_tail = 0) {
  Matrix m = random_matrix(rng, k, dim);
  std::vector<std::uint8_t> mask(k, 1);
  for (std::size_t j = k - masked_tail; j < k; ++j) mask[j] = 0;
  return make_encoded(m, mask);
}

}  // namespace

TEST_CASE("raw_score with one prototype is plain cosine") {
  SeededRng rng(1);
  const EncodedSequence enc = random_encoded(rng, 4, 5);
  const Matrix c = random_matrix(rng, 5, 1);
  const auto [scores, winners] = raw_score(enc, c);
  std::vector<double> column(5);
  for (std::size_t r = 0; r < 5; ++r) column[r] = c(r, 0);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(scores[j] == cosine_similarity(enc.contextual.row(j), column));
    CHECK(winners[j] == 0);
  }
}

TEST_CASE("a prototype equal to the token embedding scores 1") {
  SeededRng rng(2);
  const EncodedSequence enc = random_encoded(rng, 3, 4);
  Matrix c = random_matrix(rng, 4, 2);
  for (std::size_t r = 0; r < 4; ++r) c(r, 1) = enc.contextual(1, r);
  const auto [scores, winners] = raw_score(enc, c);
  CHECK(scores[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(winners[1] == 1);
}

TEST_CASE("raw_score equals the exhaustive double-loop oracle") {
  SeededRng rng(3);
  const EncodedSequence enc = random_encoded(rng, 3, 6);
  const Matrix c = random_matrix(rng, 6, 2);
  const auto [scores, winners] = raw_score(enc, c);
  for (std::size_t j = 0; j < 3; ++j) {
    double best = -1e300;
    std::size_t best_p = 0;
    for (std::size_t p = 0; p < 2; ++p) {
      std::vector<double> column(6);
      for (std::size_t r = 0; r < 6; ++r) column[r] = c(r, p);
      const double s = cosine_similarity(enc.contextual.row(j), column);
      if (s > best) {
        best = s;
        best_p = p;
      }
    }
    CHECK(scores[j] == best);
    CHECK(winners[j] == best_p);
  }
}

TEST_CASE("raw_score rejects mismatched dimensions citing the constraint") {
  SeededRng rng(4);
  const EncodedSequence enc = random_encoded(rng, 2, 4);
  const Matrix c = random_matrix(rng, 5, 2);
  CHECK_THROWS_WITH_AS(raw_score(enc, c), doctest::Contains("equal"), ConfigError);
}

TEST_CASE("raw_score marks masked positions with -inf") {
  SeededRng rng(5);
  const EncodedSequence enc = random_encoded(rng, 4, 3, /*masked_tail=*/2);
  const auto [scores, winners] = raw_score(enc, random_matrix(rng, 3, 2));
  CHECK(std::isinf(scores[2]));
  CHECK(scores[2] < 0);
  CHECK(std::isinf(scores[3]));
}

TEST_CASE("normalize") {
  CHECK(normalize(std::vector<double>{1.3}, {1}) == std::vector<double>{1.0});

  const auto quarter = normalize(std::vector<double>{2, 2, 2, 2}, {1, 1, 1, 1});
  for (double w : quarter) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));

  // One masked position; the rest must match a plain 2-way softmax.
  const auto w = normalize(std::vector<double>{1.0, 2.0, -99.0}, {1, 1, 0});
  const auto two = softmax(std::vector<double>{1.0, 2.0});
  CHECK(w[0] == doctest::Approx(two[0]).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(two[1]).epsilon(1e-12));
  CHECK(w[2] == 0.0);

  CHECK_THROWS_AS(normalize(std::vector<double>{1.0}, {0}), UsageError);
}

TEST_CASE("label_wise_embedding") {
  SeededRng rng(6);
  const EncodedSequence enc = random_encoded(rng, 3, 4);

  std::vector<double> onehot{0, 1, 0};
  const auto picked = label_wise_embedding(enc, onehot);
  for (std::size_t d = 0; d < 4; ++d) CHECK(picked[d] == enc.contextual(1, d));

  std::vector<double> uniform(3, 1.0 / 3.0);
  const auto mean = label_wise_embedding(enc, uniform);
  for (std::size_t d = 0; d < 4; ++d) {
    const double expect =
        (enc.contextual(0, d) + enc.contextual(1, d) + enc.contextual(2, d)) / 3.0;
    CHECK(mean[d] == doctest::Approx(expect).epsilon(1e-12));
  }

  const std::vector<double> w = testsup::random_vector(rng, 3, 0.0, 1.0);
  const auto v = label_wise_embedding(enc, w);
  for (std::size_t d = 0; d < 4; ++d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < 3; ++j) acc += w[j] * enc.contextual(j, d);
    CHECK(std::fabs(v[d] - acc) < 1e-12);
  }
}

TEST_CASE("encode_all composes the per-label pipeline") {
  SeededRng rng(7);
  const EncodedSequence enc = random_encoded(rng, 3, 4);

  LabelEmbeddingSpace one;
  one.labels = {"only"};
  one.matrices = {random_matrix(rng, 4, 2)};
  const auto [lwe1, rec1] = encode_all(enc, one);
  CHECK(lwe1.concatenated == lwe1.per_label[0]);

  LabelEmbeddingSpace twin;
  twin.labels = {"a", "b"};
  twin.matrices = {one.matrices[0], one.matrices[0]};
  const auto [lwe2, rec2] = encode_all(enc, twin);
  CHECK(lwe2.per_label[0] == lwe2.per_label[1]);
}

TEST_CASE("encode_all matches the brute-force full-pipeline oracle") {
  SeededRng rng(8);
  for (int iter = 0; iter < 20; ++iter) {
    const std::size_t k = 2 + rng.uniform_index(4);
    const std::size_t dim = 2 + rng.uniform_index(5);
    const EncodedSequence enc = random_encoded(rng, k, dim, rng.uniform_index(2));
    std::vector<Matrix> mats{random_matrix(rng, dim, 2), random_matrix(rng, dim, 2)};
    LabelEmbeddingSpace space;
    space.labels = {"x", "y"};
    space.matrices = mats;
    const auto [lwe, rec] = encode_all(enc, space);
    const auto expect = oracles::brute_force_encode(enc.contextual, enc.mask, mats);
    REQUIRE(lwe.concatenated.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(std::fabs(lwe.concatenated[i] - expect[i]) < 1e-10);
    }
  }
}

TEST_CASE("attention weights are a distribution over unmasked positions") {
  SeededRng rng(9);
  for (int iter = 0; iter < 50; ++iter) {
    const std::size_t k = 2 + rng.uniform_index(6);
    const std::size_t dim = 2 + rng.uniform_index(5);
    const std::size_t masked = rng.uniform_index(k);
    const EncodedSequence enc = random_encoded(rng, k, dim, masked);
    LabelEmbeddingSpace space;
    space.labels = {"a", "b", "c"};
    for (int i = 0; i < 3; ++i) {
      space.matrices.push_back(random_matrix(rng, dim, 1 + rng.uniform_index(3)));
    }
    const auto [lwe, rec] = encode_all(enc, space);
    for (std::size_t i = 0; i < 3; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (enc.mask[j]) {
          CHECK(rec.weights(i, j) > 0.0);
          CHECK(rec.weights(i, j) <= 1.0);
          sum += rec.weights(i, j);
        } else {
          CHECK(rec.weights(i, j) == 0.0);
        }
      }
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("raw scores are invariant to positive rescaling") {
  SeededRng rng(10);
  const std::size_t k = 4, dim = 5;
  Matrix ctx = random_matrix(rng, k, dim);
  Matrix c = random_matrix(rng, dim, 3);
  const auto [scores, winners] =
      raw_score(make_encoded(ctx, std::vector<std::uint8_t>(k, 1)), c);

  Matrix ctx2 = ctx;
  for (std::size_t d = 0; d < dim; ++d) ctx2(1, d) *= 7.5;  // scale one row
  Matrix c2 = c;
  for (std::size_t d = 0; d < dim; ++d) c2(d, 2) *= 0.03;  // scale one prototype
  const auto [scores2, winners2] =
      raw_score(make_encoded(ctx2, std::vector<std::uint8_t>(k, 1)), c2);
  for (std::size_t j = 0; j < k; ++j) {
    CHECK(std::fabs(scores[j] - scores2[j]) < 1e-9);
    CHECK(winners[j] == winners2[j]);
  }
}

TEST_CASE("t=1 encode_all is bit-equal to the single-prototype reference") {
  SeededRng rng(11);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t k = 1 + rng.uniform_index(6);
    const std::size_t dim = 2 + rng.uniform_index(5);
    const std::size_t masked = k > 1 ? rng.uniform_index(k - 1) : 0;
    const EncodedSequence enc = random_encoded(rng, k, dim, masked);
    LabelEmbeddingSpace space;
    space.labels = {"p", "q"};
    space.matrices = {random_matrix(rng, dim, 1), random_matrix(rng, dim, 1)};
    const auto [lwe, rec] = encode_all(enc, space);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto ref = oracles::single_prototype_reference(enc, space.matrices[i]);
      REQUIRE(ref.size() == dim);
      for (std::size_t d = 0; d < dim; ++d) {
        CHECK(lwe.per_label[i][d] == ref[d]);  // exact, not approximate
      }
    }
  }
}

TEST_CASE("permuting labels permutes the blocks unchanged") {
  SeededRng rng(12);
  const EncodedSequence enc = random_encoded(rng, 3, 4);
  LabelEmbeddingSpace space;
  space.labels = {"a", "b", "c"};
  for (int i = 0; i < 3; ++i) space.matrices.push_back(random_matrix(rng, 4, 2));
  const auto [lwe, rec] = encode_all(enc, space);

  LabelEmbeddingSpace permuted;
  permuted.labels = {"c", "a", "b"};
  permuted.matrices = {space.matrices[2], space.matrices[0], space.matrices[1]};
  const auto [plwe, prec] = encode_all(enc, permuted);
  CHECK(plwe.per_label[0] == lwe.per_label[2]);
  CHECK(plwe.per_label[1] == lwe.per_label[0]);
  CHECK(plwe.per_label[2] == lwe.per_label[1]);
}

TEST_CASE("encode_all_backward matches central differences over 20 seeds") {
  for (std::uint64_t seed = 13; seed < 33; ++seed) {
  SeededRng rng(seed);
  const std::size_t k = 3, dim = 4, protos = 2;
  Matrix ctx = random_matrix(rng, k, dim);
  std::vector<std::uint8_t> mask(k, 1);
  LabelEmbeddingSpace space;
  space.labels = {"u", "v"};
  space.matrices = {random_matrix(rng, dim, protos), random_matrix(rng, dim, protos)};
  const std::vector<double> up = testsup::random_vector(rng, 2 * dim);

  auto loss = [&] {
    const auto [lwe, rec] = encode_all(make_encoded(ctx, mask), space);
    double acc = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) acc += up[i] * lwe.concatenated[i];
    return acc;
  };

  const EncodedSequence enc = make_encoded(ctx, mask);
  const auto [lwe, rec] = encode_all(enc, space);
  const LabelAttentionGrads g = encode_all_backward(enc, space, rec, up);

  const double eps = 1e-5;
  auto fd_check = [&](double* param, double analytic) {
    const double saved = *param;
    *param = saved + eps;
    const double a = loss();
    *param = saved - eps;
    const double b = loss();
    *param = saved;
    const double fd = (a - b) / (2 * eps);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
    CHECK(std::fabs(fd - analytic) / denom < 1e-5);
  };
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t idx = 0; idx < space.matrices[i].size(); ++idx) {
      fd_check(&space.matrices[i].data[idx], g.dlabels[i].data[idx]);
    }
  }
  for (std::size_t idx = 0; idx < ctx.size(); ++idx) {
    fd_check(&ctx.data[idx], g.dcontextual.data[idx]);
  }
  }
}

TEST_CASE("gradient reaches only the winning prototype columns") {
  SeededRng rng(14);
  const std::size_t k = 4, dim = 3, protos = 3;
  const EncodedSequence enc = random_encoded(rng, k, dim);
  LabelEmbeddingSpace space;
  space.labels = {"solo"};
  space.matrices = {random_matrix(rng, dim, protos)};
  const auto [lwe, rec] = encode_all(enc, space);
  const LabelAttentionGrads g = encode_all_backward(
      enc, space, rec, testsup::random_vector(rng, dim));

  std::vector<bool> winning(protos, false);
  for (std::size_t j = 0; j < k; ++j) winning[rec.winners[0][j]] = true;
  for (std::size_t p = 0; p < protos; ++p) {
    if (winning[p]) continue;
    for (std::size_t d = 0; d < dim; ++d) CHECK(g.dlabels[0](d, p) == 0.0);
  }
}

TEST_CASE("multi_layer_encode") {
  SeededRng rng(15);
  const EncodedSequence enc = random_encoded(rng, 3, 4);
  LabelEmbeddingSpace space;
  space.labels = {"a", "b"};
  space.matrices = {random_matrix(rng, 4, 2), random_matrix(rng, 4, 2)};

  const auto [single, srec] = multi_layer_encode({enc}, {space});
  const auto [direct, drec] = encode_all(enc, space);
  CHECK(single == direct.concatenated);

  const auto [doubled, drecs] = multi_layer_encode({enc, enc}, {space, space});
  REQUIRE(doubled.size() == 2 * direct.concatenated.size());
  for (std::size_t i = 0; i < direct.concatenated.size(); ++i) {
    CHECK(doubled[i] == direct.concatenated[i]);
    CHECK(doubled[direct.concatenated.size() + i] == direct.concatenated[i]);
  }

  // Three distinct layers against the per-layer oracle.
  std::vector<EncodedSequence> layers;
  std::vector<LabelEmbeddingSpace> spaces;
  for (int l = 0; l < 3; ++l) {
    layers.push_back(random_encoded(rng, 3, 4));
    LabelEmbeddingSpace s;
    s.labels = {"a", "b"};
    s.matrices = {random_matrix(rng, 4, 2), random_matrix(rng, 4, 2)};
    spaces.push_back(std::move(s));
  }
  const auto [tri, trecs] = multi_layer_encode(layers, spaces);
  std::vector<double> expect;
  for (int l = 0; l < 3; ++l) {
    const auto block =
        oracles::brute_force_encode(layers[l].contextual, layers[l].mask,
                                    spaces[l].matrices);
    expect.insert(expect.end(), block.begin(), block.end());
  }
  REQUIRE(tri.size() == expect.size());
  for (std::size_t i = 0; i < tri.size(); ++i) {
    CHECK(std::fabs(tri[i] - expect[i]) < 1e-10);
  }

  CHECK_THROWS_AS(multi_layer_encode({enc, enc}, {space}), ConfigError);
}
