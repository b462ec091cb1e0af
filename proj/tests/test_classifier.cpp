#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lguided/classifier.hpp"
#include "lguided/gradcheck.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lguided;
using oracles::make_encoded;
using testsup::random_matrix;
using testsup::random_vector;

TEST_CASE("zero weights produce the uniform distribution") {
  ClassifierHead head;
  head.compress.W = Matrix(6, 4);
  head.compress.b = Matrix(1, 6);
  head.output.W = Matrix(3, 6);
  head.output.b = Matrix(1, 3);
  const HeadCache cache = head_forward(head, std::vector<double>{1, -2, 3, 4});
  for (double p : cache.probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("hand-set 2x2 head matches the extended-precision computation") {
  ClassifierHead head;
  head.compress.W = Matrix(2, 2);
  head.compress.W.data = {1.0, 0.0, 0.0, 1.0};
  head.compress.b = Matrix(1, 2);
  head.compress.b.data = {0.5, -0.5};
  head.output.W = Matrix(2, 2);
  head.output.W.data = {1.0, 2.0, 3.0, 4.0};
  head.output.b = Matrix(1, 2);

  const HeadCache cache = head_forward(head, std::vector<double>{0.2, -0.7});
  // hidden = relu([0.7, -1.2]) = [0.7, 0]; logits = [0.7, 2.1]
  CHECK(cache.hidden[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(cache.hidden[1] == 0.0);
  const long double z0 = 0.7L, z1 = 2.1L;
  const long double e0 = std::exp(z0 - z1);
  const long double p1 = 1.0L / (1.0L + e0);
  CHECK(std::fabs(cache.probs[1] - (double)p1) < 1e-14);
  CHECK(std::fabs(cache.probs[0] - (double)(1.0L - p1)) < 1e-14);
}

TEST_CASE("forward yields a valid distribution for random inputs") {
  SeededRng rng(3);
  for (int iter = 0; iter < 30; ++iter) {
    const std::size_t labels = 2 + rng.uniform_index(5);
    const std::size_t in = 1 + rng.uniform_index(8);
    ClassifierHead head = init_head(labels, in, 10 * labels, rng);
    const HeadCache cache = head_forward(head, random_vector(rng, in, -10.0, 10.0));
    double sum = 0.0;
    for (double p : cache.probs) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      sum += p;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(std::vector<double>{0.0, 1.0}, 1) == 0.0);

  const std::vector<double> uniform(4, 0.25);
  CHECK(cross_entropy(uniform, 2) ==
        doctest::Approx(1.3862943611198906188).epsilon(1e-14));

  SeededRng rng(4);
  for (int iter = 0; iter < 20; ++iter) {
    const std::vector<double> logits = random_vector(rng, 5, -8.0, 8.0);
    const std::size_t gold = rng.uniform_index(5);
    // Extended-precision -log softmax oracle.
    long double mx = logits[0];
    for (double z : logits) mx = std::max<long double>(mx, z);
    long double sum = 0;
    for (double z : logits) sum += std::exp((long double)z - mx);
    const long double expect = std::log(sum) + mx - logits[gold];
    CHECK(std::fabs(cross_entropy_from_logits(logits, gold) - (double)expect) < 1e-10);
    CHECK(std::fabs(cross_entropy(softmax(logits), gold) - (double)expect) < 1e-9);
  }

  CHECK_THROWS_AS(cross_entropy(uniform, 4), UsageError);
  CHECK(cross_entropy_from_logits(std::vector<double>{0, 0, 0, 0}, 1) ==
        doctest::Approx(1.3862943611198906188).epsilon(1e-14));
}

TEST_CASE("cross entropy is nonnegative, zero only at certainty") {
  SeededRng rng(5);
  for (int iter = 0; iter < 30; ++iter) {
    const std::vector<double> probs = softmax(random_vector(rng, 4, -6.0, 6.0));
    const std::size_t gold = rng.uniform_index(4);
    CHECK(cross_entropy(probs, gold) >= 0.0);
    if (probs[gold] < 1.0) CHECK(cross_entropy(probs, gold) > 0.0);
  }
}

TEST_CASE("logit-layer gradient is probs minus onehot, exactly") {
  SeededRng rng(6);
  ClassifierHead head = init_head(3, 5, 30, rng);
  const HeadCache cache = head_forward(head, random_vector(rng, 5));
  const HeadGrads g = head_backward(head, cache, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const double expect = cache.probs[i] - (i == 1 ? 1.0 : 0.0);
    CHECK(g.db_output(0, i) == expect);
  }
}

TEST_CASE("head gradients match central differences") {
  SeededRng rng(7);
  ClassifierHead head = init_head(3, 4, 30, rng);
  const std::vector<double> input = random_vector(rng, 4);
  const std::size_t gold = 2;

  auto loss = [&] {
    return cross_entropy_from_logits(head_forward(head, input).logits, gold);
  };
  const HeadCache cache = head_forward(head, input);
  const HeadGrads g = head_backward(head, cache, gold);

  const double eps = 1e-5;
  auto fd_check = [&](double* p, double analytic) {
    const double saved = *p;
    *p = saved + eps;
    const double a = loss();
    *p = saved - eps;
    const double b = loss();
    *p = saved;
    const double fd = (a - b) / (2 * eps);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
    CHECK(std::fabs(fd - analytic) / denom < 1e-6);
  };
  for (std::size_t i = 0; i < head.compress.W.size(); ++i) {
    fd_check(&head.compress.W.data[i], g.dW_compress.data[i]);
  }
  for (std::size_t i = 0; i < head.compress.b.size(); ++i) {
    fd_check(&head.compress.b.data[i], g.db_compress.data[i]);
  }
  for (std::size_t i = 0; i < head.output.W.size(); ++i) {
    fd_check(&head.output.W.data[i], g.dW_output.data[i]);
  }
  for (std::size_t i = 0; i < head.output.b.size(); ++i) {
    fd_check(&head.output.b.data[i], g.db_output.data[i]);
  }
}

TEST_CASE("dead ReLU units pass no gradient into the compress layer") {
  SeededRng rng(8);
  ClassifierHead head = init_head(2, 3, 4, rng);
  const std::vector<double> input = random_vector(rng, 3);
  HeadCache cache = head_forward(head, input);
  const HeadGrads g = head_backward(head, cache, 0);
  for (std::size_t i = 0; i < cache.hidden_pre.size(); ++i) {
    if (cache.hidden_pre[i] <= 0.0) {
      for (std::size_t j = 0; j < head.compress.W.cols; ++j) {
        CHECK(g.dW_compress(i, j) == 0.0);
      }
      CHECK(g.db_compress(0, i) == 0.0);
    }
  }
}

TEST_CASE("pooled baseline forward") {
  SeededRng rng(9);
  Matrix ctx = random_matrix(rng, 5, 3);
  std::vector<std::uint8_t> one_mask{0, 1, 0, 0, 0};
  const auto single = pooled_baseline_forward(make_encoded(ctx, one_mask),
                                              PoolMode::kMean, nullptr);
  for (std::size_t d = 0; d < 3; ++d) CHECK(single[d] == ctx(1, d));

  std::vector<std::uint8_t> two_mask{1, 1, 0, 0, 0};
  const auto mean2 = pooled_baseline_forward(make_encoded(ctx, two_mask),
                                             PoolMode::kMean, nullptr);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(mean2[d] == doctest::Approx((ctx(0, d) + ctx(1, d)) / 2.0).epsilon(1e-15));
  }

  std::vector<std::uint8_t> mask{1, 0, 1, 1, 0};
  const auto pooled = pooled_baseline_forward(make_encoded(ctx, mask),
                                              PoolMode::kMean, nullptr);
  for (std::size_t d = 0; d < 3; ++d) {
    const double expect = (ctx(0, d) + ctx(2, d) + ctx(3, d)) / 3.0;
    CHECK(std::fabs(pooled[d] - expect) < 1e-12);
  }

  const auto mx = pooled_baseline_forward(make_encoded(ctx, mask), PoolMode::kMax,
                                          nullptr);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(mx[d] == std::max({ctx(0, d), ctx(2, d), ctx(3, d)}));
  }
  const auto last = pooled_baseline_forward(make_encoded(ctx, mask), PoolMode::kLast,
                                            nullptr);
  for (std::size_t d = 0; d < 3; ++d) CHECK(last[d] == ctx(3, d));

  CHECK_THROWS_AS(pooled_baseline_forward(
                      make_encoded(ctx, {0, 0, 0, 0, 0}), PoolMode::kMean, nullptr),
                  UsageError);
}

TEST_CASE("pooled baseline gradients match central differences") {
  SeededRng rng(10);
  for (PoolMode mode : {PoolMode::kMean, PoolMode::kMax, PoolMode::kLast}) {
    Matrix ctx = random_matrix(rng, 4, 3);
    const std::vector<std::uint8_t> mask{1, 1, 1, 0};
    const std::vector<double> up = random_vector(rng, 3);

    auto loss = [&] {
      const auto v =
          pooled_baseline_forward(make_encoded(ctx, mask), mode, nullptr);
      double acc = 0.0;
      for (std::size_t d = 0; d < v.size(); ++d) acc += up[d] * v[d];
      return acc;
    };
    PoolCache cache;
    pooled_baseline_forward(make_encoded(ctx, mask), mode, &cache);
    const Matrix g =
        pooled_baseline_backward(make_encoded(ctx, mask), cache, up);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      const double saved = ctx.data[i];
      ctx.data[i] = saved + eps;
      const double a = loss();
      ctx.data[i] = saved - eps;
      const double b = loss();
      ctx.data[i] = saved;
      const double fd = (a - b) / (2 * eps);
      CHECK(std::fabs(fd - g.data[i]) < 1e-6);
    }
  }
}

TEST_CASE("composed toy model passes the full gradient check") {
  Model model = testsup::toy_model(99);
  SeededRng rng(100);
  const GradCheckReport report =
      gradient_check(model, testsup::toy_doc(), nullptr, 1e-5, 300, rng);
  CHECK(report.max_rel_err < 1e-4);
}
