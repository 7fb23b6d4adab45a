#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ilgen/overlap.hpp"
#include "support.hpp"

using namespace ilgen;
using test::code_of;

namespace {

template <Real T>
BasicDescriptorSet<T> random_set(Rng& rng, const std::string& prefix, std::size_t n, std::size_t dim) {
  BasicDescriptorSet<T> s(dim);
  for (std::size_t i = 0; i < n; ++i) s.add(prefix + std::to_string(i), normalize(test::random_vector(rng, dim)));
  return s;
}

// Double loop: best training row per query, then a global sort.
template <Real T>
std::vector<OverlapPair> oracle(const BasicDescriptorSet<T>& q, const BasicDescriptorSet<T>& t, std::size_t top_m) {
  std::vector<OverlapPair> best;
  for (std::size_t i = 0; i < q.size(); ++i) {
    OverlapPair b{q.id(i), "", -2.0, 0};
    for (std::size_t j = 0; j < t.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.dim(); ++k) s += double(q.row(i)[k]) * double(t.row(j)[k]);
      if (s > b.similarity || (s == b.similarity && t.id(j) < b.train_id)) b.train_id = t.id(j), b.similarity = s;
    }
    best.push_back(b);
  }
  std::sort(best.begin(), best.end(), [](const OverlapPair& a, const OverlapPair& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.query_id < b.query_id;
  });
  if (best.size() > top_m) best.resize(top_m);
  for (std::size_t r = 0; r < best.size(); ++r) best[r].rank = r + 1;
  return best;
}

}  // namespace

TEST(MineOverlap, MatchesDoubleLoopOracle) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t dim = 2 + rng.below(12);
    const auto q = random_set<float>(rng, "q", 1 + rng.below(10), dim);
    const auto train = random_set<float>(rng, "t", 1 + rng.below(40), dim);
    const std::size_t top_m = 1 + rng.below(12);
    EXPECT_EQ(mine_overlap(q, train, top_m), oracle(q, train, top_m)) << t;
    EXPECT_EQ(mine_overlap(q, train, top_m, 1, 3), oracle(q, train, top_m));
  }
  Rng r2(2);
  const auto q = random_set<float>(r2, "q", 5, 8);
  const auto train = random_set<float>(r2, "t", 20, 8);
  EXPECT_EQ(mine_overlap(q, train, 5), oracle(q, train, 5));
}

TEST(MineOverlap, SimilaritiesAreCosineScores) {
  Rng rng(3);
  const auto q = random_set<float>(rng, "q", 6, 5);
  const auto train = random_set<float>(rng, "t", 30, 5);
  const auto pairs = mine_overlap(q, train, 6);
  for (const auto& p : pairs) {
    std::size_t qi = 0, ti = 0;
    while (q.id(qi) != p.query_id) ++qi;
    while (train.id(ti) != p.train_id) ++ti;
    const auto scores = cosine_scores(q.row(qi), train);
    EXPECT_EQ(p.similarity, scores[ti]);
    EXPECT_EQ(p.similarity, *std::max_element(scores.begin(), scores.end()));
  }
  for (std::size_t i = 1; i < pairs.size(); ++i) EXPECT_GE(pairs[i - 1].similarity, pairs[i].similarity);
}

TEST(MineOverlap, PlantedDuplicateRanksFirst) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t dim = 16;
    const auto q = random_set<double>(rng, "q", 5, dim);
    auto train = random_set<double>(rng, "t", 50, dim);
    const std::size_t planted = rng.below(q.size());
    train.add("dup", normalize(std::vector<double>(q.row(planted).begin(), q.row(planted).end())));
    const auto pairs = mine_overlap(q, train, 3);
    ASSERT_FALSE(pairs.empty());
    EXPECT_EQ(pairs[0].rank, 1u);
    EXPECT_EQ(pairs[0].query_id, q.id(planted));
    EXPECT_EQ(pairs[0].train_id, "dup");
    EXPECT_NEAR(pairs[0].similarity, 1.0, 1e-12);
  }
  // same check on float storage
  auto qf = random_set<float>(rng, "q", 4, 32);
  auto tf = random_set<float>(rng, "t", 100, 32);
  tf.add("dup", normalize(std::vector<float>(qf.row(2).begin(), qf.row(2).end())));
  const auto pf = mine_overlap(qf, tf, 1);
  EXPECT_EQ(pf[0].train_id, "dup");
  EXPECT_NEAR(pf[0].similarity, 1.0, 1e-6);
}

TEST(MineOverlap, OrthogonalSetsScoreZero) {
  BasicDescriptorSet<double> q(6), t(6);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> a(6, 0.0), b(6, 0.0);
    a[i] = 1.0;
    b[i + 3] = 1.0;
    q.add("q" + std::to_string(i), normalize(a));
    t.add("t" + std::to_string(i), normalize(b));
  }
  const auto pairs = mine_overlap(q, t, 10);
  ASSERT_EQ(pairs.size(), 3u);
  for (const auto& p : pairs) {
    EXPECT_EQ(p.similarity, 0.0);
    EXPECT_EQ(p.train_id, "t0");  // tie broken by training id
  }
  EXPECT_EQ(pairs[0].query_id, "q0");
  EXPECT_EQ(pairs[2].rank, 3u);
}

TEST(MineOverlap, MoreTrainingRowsNeverLowerABestMatch) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto q = random_set<float>(rng, "q", 8, 6);
    auto train = random_set<float>(rng, "t", 5, 6);
    auto best_of = [&](const auto& pairs) {
      std::map<std::string, double> m;
      for (const auto& p : pairs) m[p.query_id] = p.similarity;
      return m;
    };
    const auto before = best_of(mine_overlap(q, train, q.size()));
    for (int extra = 0; extra < 10; ++extra)
      train.add("x" + std::to_string(extra), normalize(test::random_vector(rng, 6)));
    const auto after = best_of(mine_overlap(q, train, q.size()));
    for (const auto& [id, s] : before) EXPECT_GE(after.at(id), s);
  }
}

TEST(MineOverlap, PerQueryDepthAndErrors) {
  Rng rng(6);
  const auto q = random_set<float>(rng, "q", 3, 4);
  const auto train = random_set<float>(rng, "t", 10, 4);
  const auto deep = mine_overlap(q, train, 100, 4);
  EXPECT_EQ(deep.size(), 12u);
  const BasicDescriptorSet<float> empty(4);
  EXPECT_EQ(code_of([&] { mine_overlap(empty, train, 1); }), Errc::empty_set);
  EXPECT_EQ(code_of([&] { mine_overlap(q, empty, 1); }), Errc::empty_set);
  EXPECT_EQ(code_of([&] { mine_overlap(q, random_set<float>(rng, "t", 3, 5), 1); }), Errc::dimension_mismatch);
  EXPECT_EQ(code_of([&] { mine_overlap(q, train, 0); }), Errc::invalid_argument);
}

TEST(OverlapFormats, CsvAndContactSheet) {
  const std::vector<OverlapPair> pairs{{"q1", "t7", 0.98765432, 1}, {"q0", "t2", -0.25, 2}};
  EXPECT_EQ(format_overlap_csv(pairs),
            "query_id,train_image_id,similarity,rank\n"
            "q1,t7,0.987654,1\n"
            "q0,t2,-0.250000,2\n");
  const auto sheet = format_contact_sheet(
      pairs, [](const std::string& id) { return "eval/" + id + ".png"; },
      [](const std::string& id) { return "store/" + id + ".png"; });
  EXPECT_EQ(sheet,
            "# contact-sheet v1\n"
            "1\teval/q1.png\tstore/t7.png\t0.987654\n"
            "2\teval/q0.png\tstore/t2.png\t-0.250000\n");
}
