#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cse/common.hpp"
#include "cse/eval/metrics.hpp"

using namespace cse;

namespace {

EvalSample sample(std::vector<uint32_t> gold, std::vector<uint32_t> ranking) {
  return EvalSample{"s", "seed", std::move(gold), std::move(ranking)};
}

// Second implementation of the four metrics, written as literal formula
// transcriptions (precision@i recomputed from scratch per rank, ideal DCG
// from an explicit ideal ranking) so it shares no structure with the
// library's single-pass version.
struct Brute {
  double recall, ap, rr, ndcg;
};

Brute brute_metrics(const std::vector<uint32_t>& gold,
                    const std::vector<uint32_t>& ranking, size_t k) {
  std::set<uint32_t> g(gold.begin(), gold.end());
  auto is_hit = [&](size_t rank) {  // 1-based
    return rank <= ranking.size() && rank <= k && g.count(ranking[rank - 1]) > 0;
  };
  size_t total_hits = 0;
  for (size_t r = 1; r <= k; ++r)
    if (is_hit(r)) ++total_hits;

  Brute b{};
  b.recall = double(total_hits) / double(g.size());

  double ap_sum = 0.0;
  for (size_t r = 1; r <= k; ++r) {
    if (!is_hit(r)) continue;
    size_t hits_upto = 0;
    for (size_t q = 1; q <= r; ++q)
      if (is_hit(q)) ++hits_upto;
    ap_sum += double(hits_upto) / double(r);
  }
  b.ap = ap_sum / double(std::min(g.size(), k));

  b.rr = 0.0;
  for (size_t r = 1; r <= k; ++r) {
    if (is_hit(r)) {
      b.rr = 1.0 / double(r);
      break;
    }
  }

  double dcg = 0.0;
  for (size_t r = 1; r <= k; ++r)
    if (is_hit(r)) dcg += std::log(2.0) / std::log(double(r) + 1.0);
  double idcg = 0.0;
  for (size_t r = 1; r <= std::min(g.size(), k); ++r)
    idcg += std::log(2.0) / std::log(double(r) + 1.0);
  b.ndcg = dcg / idcg;
  return b;
}

}  // namespace

TEST_CASE("metrics: two hits of three gold in the top ten") {
  auto m = metrics_at_k(sample({101, 102, 103}, {101, 9, 8, 7, 102, 6, 5, 4, 3, 2}), 10);
  CHECK(m.recall == doctest::Approx(0.666666666667).epsilon(1e-9));
  CHECK(m.ap == doctest::Approx(0.466666666667).epsilon(1e-9));
  CHECK(m.rr == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.ndcg == doctest::Approx(0.650820518560).epsilon(1e-9));
}

TEST_CASE("metrics: perfect ranking scores 1.0 everywhere") {
  auto m = metrics_at_k(sample({1, 2, 3}, {2, 3, 1, 9, 8, 7, 6, 5, 4, 0}), 10);
  CHECK(m.recall == 1.0);
  CHECK(m.ap == 1.0);
  CHECK(m.rr == 1.0);
  CHECK(m.ndcg == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metrics: hits at ranks 1 and 4 with k=5") {
  auto m = metrics_at_k(sample({10, 11}, {10, 5, 6, 11, 7}), 5);
  CHECK(m.recall == 1.0);
  CHECK(m.ap == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(m.ndcg == doctest::Approx(0.877215315338).epsilon(1e-9));
}

TEST_CASE("metrics: gold larger than k truncates the denominators") {
  auto m = metrics_at_k(sample({1, 2, 3, 4}, {9, 1, 2, 8, 3}), 3);
  CHECK(m.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.ap == doctest::Approx(0.388888888889).epsilon(1e-9));
  CHECK(m.rr == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.ndcg == doctest::Approx(0.530721273977).epsilon(1e-9));
}

TEST_CASE("metrics: no hits means all zeros") {
  auto m = metrics_at_k(sample({1}, {9, 8, 7, 6, 5}), 5);
  CHECK(m.recall == 0.0);
  CHECK(m.ap == 0.0);
  CHECK(m.rr == 0.0);
  CHECK(m.ndcg == 0.0);
}

TEST_CASE("metrics: ranking shorter than k is scored as-is") {
  auto m = metrics_at_k(sample({7}, {3, 7}), 10);
  CHECK(m.recall == 1.0);
  CHECK(m.rr == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("metrics: invalid inputs throw") {
  CHECK_THROWS_AS(metrics_at_k(sample({1}, {}), 5), Error);
  CHECK_THROWS_AS(metrics_at_k(sample({}, {1, 2}), 5), Error);
  CHECK_THROWS_AS(metrics_at_k(sample({1}, {1}), 0), Error);
}

TEST_CASE("metrics: recall monotone in k, everything in [0,1]") {
  auto rng = rng_for(5, "eval_mono");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<uint32_t> pool(30);
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = uint32_t(i);
    shuffle_indices(pool, rng);
    std::vector<uint32_t> gold(pool.begin(), pool.begin() + 1 + draw_below(rng, 6));
    std::vector<uint32_t> ranking(pool.begin(), pool.end());
    shuffle_indices(ranking, rng);

    double prev = 0.0;
    for (size_t k = 1; k <= ranking.size(); ++k) {
      auto m = metrics_at_k(sample(gold, ranking), k);
      CHECK(m.recall >= prev);
      prev = m.recall;
      for (double v : {m.recall, m.ap, m.rr, m.ndcg}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
      }
    }
    CHECK(prev == 1.0);  // full-length ranking finds every gold label
  }
}

TEST_CASE("metrics: ndcg is 1 exactly when the best slots are all hits") {
  // gold occupying the top min(|G|,k) slots in any order
  auto m1 = metrics_at_k(sample({4, 5, 6}, {6, 4, 5, 1, 2}), 5);
  CHECK(m1.ndcg == doctest::Approx(1.0).epsilon(1e-12));
  auto m2 = metrics_at_k(sample({4, 5, 6}, {9, 8, 7, 4, 5}), 3);
  CHECK(m2.ndcg < 1.0);
  // |G| > k: k hits at the top is ideal
  auto m3 = metrics_at_k(sample({4, 5, 6, 7}, {7, 6, 1, 2, 3}), 2);
  CHECK(m3.ndcg == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metrics: agree with the brute-force oracle on random rankings") {
  auto rng = rng_for(99, "eval_brute");
  for (int trial = 0; trial < 1000; ++trial) {
    size_t n = 5 + draw_below(rng, 40);
    std::vector<uint32_t> pool(n);
    for (size_t i = 0; i < n; ++i) pool[i] = uint32_t(i);
    shuffle_indices(pool, rng);
    size_t ng = 1 + draw_below(rng, std::min<size_t>(8, n - 1));
    std::vector<uint32_t> gold(pool.begin(), pool.begin() + ng);
    std::vector<uint32_t> ranking(pool.begin(), pool.end());
    shuffle_indices(ranking, rng);
    if (draw_below(rng, 2) == 0) ranking.resize(1 + draw_below(rng, n));
    size_t k = 1 + draw_below(rng, n + 5);

    auto m = metrics_at_k(sample(gold, ranking), k);
    auto b = brute_metrics(gold, ranking, k);
    CHECK(m.recall == doctest::Approx(b.recall).epsilon(1e-9));
    CHECK(m.ap == doctest::Approx(b.ap).epsilon(1e-9));
    CHECK(m.rr == doctest::Approx(b.rr).epsilon(1e-9));
    CHECK(m.ndcg == doctest::Approx(b.ndcg).epsilon(1e-9));
  }
}

TEST_CASE("evaluate: single sample reproduces its own metrics") {
  EvalSample s{"sent1", "a", {3, 4}, {3, 9, 4, 8}};
  auto rep = evaluate({s}, {5});
  auto m = metrics_at_k(s, 5);
  CHECK(rep.samples == 1);
  CHECK(rep.at(5).recall == m.recall);
  CHECK(rep.at(5).ap == m.ap);
  CHECK(rep.at(5).ndcg == m.ndcg);
}

TEST_CASE("evaluate: macro average of a zero and a one sample") {
  EvalSample hit{"s1", "a", {3}, {3, 9}};
  EvalSample miss{"s2", "b", {4}, {9, 8}};
  auto rep = evaluate({hit, miss}, {2});
  CHECK(rep.at(2).recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.at(2).rr == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.samples == 2);
}

TEST_CASE("evaluate: permutation invariant with canonical sample order") {
  auto rng = rng_for(17, "eval_perm");
  std::vector<EvalSample> samples;
  for (int i = 0; i < 20; ++i) {
    std::vector<uint32_t> pool(12);
    for (size_t j = 0; j < pool.size(); ++j) pool[j] = uint32_t(j);
    shuffle_indices(pool, rng);
    samples.push_back(EvalSample{"s" + std::to_string(i / 3),
                                 "seed" + std::to_string(i),
                                 {pool[0], pool[1]},
                                 std::vector<uint32_t>(pool.begin() + 2, pool.end())});
  }
  auto rep1 = evaluate(samples, {3, 5});
  std::reverse(samples.begin(), samples.end());
  auto rep2 = evaluate(samples, {3, 5});
  CHECK(rep1.at(3).recall == rep2.at(3).recall);
  CHECK(rep1.at(5).ndcg == rep2.at(5).ndcg);
  CHECK(rep1.keys == rep2.keys);
  REQUIRE(rep1.per_sample.size() == rep2.per_sample.size());
  for (size_t i = 0; i < rep1.per_sample.size(); ++i)
    CHECK(rep1.per_sample[i][0].recall == rep2.per_sample[i][0].recall);
}

TEST_CASE("evaluate: empty inputs rejected") {
  CHECK_THROWS_AS(evaluate({}, {5}), EmptyCorpusError);
  EvalSample s{"s", "a", {1}, {2}};
  CHECK_THROWS_AS(evaluate({s}, {}), Error);
}

TEST_CASE("evaluate: column extraction pairs with the key order") {
  EvalSample s1{"s1", "a", {3}, {3}};
  EvalSample s2{"s2", "b", {4}, {9}};
  auto rep = evaluate({s2, s1}, {1});
  auto col = rep.column(1, &MetricsAtK::recall);
  REQUIRE(col.size() == 2);
  CHECK(col[0] == 1.0);  // s1 sorts first
  CHECK(col[1] == 0.0);
  CHECK_THROWS_AS(rep.column(7, &MetricsAtK::recall), Error);
}

TEST_CASE("report_tsv: one row per system") {
  EvalSample s{"s1", "a", {3}, {3, 9}};
  auto rep = evaluate({s}, {5, 10});
  auto tsv = report_tsv({{"model", rep}, {"baseline", rep}});
  CHECK(tsv.find("system\trecall@5") != std::string::npos);
  CHECK(tsv.find("recall@10") != std::string::npos);
  CHECK(tsv.find("\nmodel\t") != std::string::npos);
  CHECK(tsv.find("\nbaseline\t") != std::string::npos);
}

TEST_CASE("t-test: identical columns give t=0, p=1") {
  std::vector<double> a{0.1, 0.5, 0.9, 0.3};
  auto r = paired_t_test(a, a);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
}

TEST_CASE("t-test: constant positive difference drives p to zero") {
  std::vector<double> a(100), b(100);
  for (size_t i = 0; i < a.size(); ++i) {
    b[i] = 0.001 * double(i);
    a[i] = b[i] + 1.0;
  }
  auto r = paired_t_test(a, b);
  CHECK(std::isinf(r.t));
  CHECK(r.t > 0);
  CHECK(r.p == 0.0);
}

TEST_CASE("t-test: small-sample case matches the reference values") {
  std::vector<double> a{0.62, 0.55, 0.71, 0.30, 0.44, 0.90,
                        0.12, 0.66, 0.58, 0.41, 0.77, 0.25};
  std::vector<double> b{0.60, 0.50, 0.75, 0.28, 0.40, 0.88,
                        0.15, 0.60, 0.55, 0.45, 0.70, 0.20};
  auto r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(1.886884054331).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(0.085833152333).epsilon(1e-9));
  auto flipped = paired_t_test(b, a);
  CHECK(flipped.t == doctest::Approx(-1.886884054331).epsilon(1e-9));
  CHECK(flipped.p == doctest::Approx(0.085833152333).epsilon(1e-9));
}

TEST_CASE("t-test: large samples use the normal approximation") {
  // splitmix64 counter stream, mirrored in the reference script
  uint64_t state = 424242;
  auto next_unit = [&]() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return double(z >> 11) * 0x1.0p-53;
  };
  std::vector<double> a(10000), b(10000);
  for (auto& v : a) v = next_unit();
  for (auto& v : b) v = next_unit();
  auto r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(0.650289698194).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(0.515505110213).epsilon(1e-9));
}

TEST_CASE("t-test: bad inputs rejected") {
  std::vector<double> a{1.0, 2.0}, b{1.0};
  CHECK_THROWS_AS(paired_t_test(a, b), ShapeError);
  std::vector<double> one{1.0};
  CHECK_THROWS_AS(paired_t_test(one, one), Error);
}
