#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ilgen/losses.hpp"
#include "support.hpp"

using namespace ilgen;
using test::code_of;
using test::numeric_gradient;
using test::relative_error;

namespace {

constexpr double kGradTol = 1e-4;

double plain_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight-line recall@k: no shared subexpressions with the library.
double recall_reference(const std::vector<double>& s, const LabelVector& y, const RecallKConfig& cfg) {
  double total = 0.0;
  std::size_t np = 0;
  for (auto l : y) np += l;
  for (std::size_t k : cfg.ks) {
    double recall = 0.0;
    for (std::size_t p = 0; p < s.size(); ++p) {
      if (!y[p]) continue;
      double rank = 1.0;
      for (std::size_t j = 0; j < s.size(); ++j)
        if (j != p && !(cfg.rank_negatives_only && y[j])) rank += plain_sigmoid((s[j] - s[p]) / cfg.temp_rank);
      recall += plain_sigmoid((static_cast<double>(k) - rank) / cfg.temp_outer);
    }
    total += 1.0 - recall / static_cast<double>(std::min(np, k));
  }
  return total / static_cast<double>(cfg.ks.size());
}

LabelVector random_labels(Rng& rng, std::size_t n) {
  LabelVector y(n);
  for (auto& l : y) l = rng.bernoulli(0.35) ? 1 : 0;
  y[0] = 1;
  y[1] = 0;
  shuffle(std::span<std::uint8_t>(y), rng);
  return y;
}

std::vector<double> concat(std::initializer_list<std::span<const double>> parts) {
  std::vector<double> out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

TEST(SmoothRank, Examples) {
  const std::vector<double> low(10, -1.0);
  EXPECT_NEAR(smooth_rank(1.0, low, 0.01), 1.0, 1e-9);
  const std::vector<double> same{0.4};
  EXPECT_EQ(smooth_rank(0.4, same, 0.01), 1.5);
  const std::vector<double> two{0.3, 0.1};
  EXPECT_NEAR(smooth_rank(0.2, two, 0.5), 2.0, 1e-15);
}

TEST(SmoothRank, ConvergesToExactRankForLargeGaps) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const double temp = std::pow(10.0, -rng.uniform(1.0, 3.0));
    const std::size_t n = 1 + rng.below(30);
    // distinct scores on a grid spaced 100*temp apart
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * 100.0 * temp;
    shuffle(std::span<double>(grid), rng);
    const double pos = grid.back();
    grid.pop_back();
    double exact = 1.0;
    for (double g : grid) exact += g > pos ? 1.0 : 0.0;
    EXPECT_LE(std::abs(smooth_rank(pos, grid, temp) - exact), 1e-3);
  }
}

TEST(SmoothRank, Errors) {
  const std::vector<double> bad{std::nan("")};
  EXPECT_EQ(code_of([&] { smooth_rank(0.0, bad, 0.1); }), Errc::non_finite);
  EXPECT_EQ(code_of([] { smooth_rank(0.0, std::vector<double>{1.0}, 0.0); }), Errc::invalid_argument);
}

TEST(RecallAtKLoss, SaturatedPerfectRanking) {
  // 1 positive at 0.9, negatives far below: rank(p) = 1, so each k contributes
  // 1 - sigmoid((k - 1) / temp_outer); at k = 1 that is 1/2 whatever the temperature.
  const std::vector<double> s{0.9, -0.5, -0.6, -0.7, -0.8};
  const LabelVector y{1, 0, 0, 0, 0};
  double expected = 0.0;
  for (double k : {1.0, 2.0, 4.0, 8.0}) expected += (1.0 - plain_sigmoid(k - 1.0)) / 4.0;
  EXPECT_NEAR(recall_at_k_loss(s, y).value, expected, 1e-12);
  RecallKConfig deep;
  deep.ks = {8};
  EXPECT_LE(recall_at_k_loss(s, y, deep).value, 1e-3);
  // no other ranking of this score multiset does better
  const double best = recall_at_k_loss(s, y).value;
  for (std::size_t p = 1; p < s.size(); ++p) {
    LabelVector other(s.size(), 0);
    other[p] = 1;
    EXPECT_GT(recall_at_k_loss(s, other).value, best);
  }
}

TEST(RecallAtKLoss, PositiveBelowTwentyNegatives) {
  std::vector<double> s(21, 0.9);
  s[0] = -0.9;
  LabelVector y(21, 0);
  y[0] = 1;
  RecallKConfig cfg;
  cfg.ks = {1};
  const double expected = 1.0 - plain_sigmoid(1.0 - 21.0);
  EXPECT_NEAR(recall_at_k_loss(s, y, cfg).value, expected, 1e-6);
  EXPECT_NEAR(recall_at_k_loss(s, y, cfg).value, 1.0, 1e-6);
}

TEST(RecallAtKLoss, MatchesReferenceAndFiniteDifferences) {
  Rng rng(100);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = t == 0 ? 8 : 3 + rng.below(14);
    const auto y = random_labels(rng, n);
    RecallKConfig cfg;
    // moderate temperatures keep the central-difference truncation error small
    cfg.temp_rank = rng.uniform(0.05, 0.5);
    cfg.temp_outer = rng.uniform(0.5, 2.0);
    const auto s = test::random_vector(rng, n);
    const auto rep = recall_at_k_loss(s, y, cfg);
    EXPECT_NEAR(rep.value, recall_reference(s, y, cfg), 1e-12);
    EXPECT_GE(rep.value, 0.0);
    EXPECT_LE(rep.value, 1.0);
    const auto num = numeric_gradient([&](const std::vector<double>& x) { return recall_at_k_loss(x, y, cfg).value; }, s);
    EXPECT_LE(relative_error(rep.grad, num), kGradTol) << "instance " << t;
  }
}

TEST(RecallAtKLoss, DefaultTemperaturesFiniteDifferences) {
  // at temp_rank 0.01 scores need to sit away from each other for h=1e-6 to resolve the sigmoids
  Rng rng(101);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 8;
    const auto y = random_labels(rng, n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = 0.9 - 0.012 * static_cast<double>(i) + rng.uniform(-0.002, 0.002);
    shuffle(std::span<double>(s), rng);
    const auto rep = recall_at_k_loss(s, y);
    EXPECT_NEAR(rep.value, recall_reference(s, y, {}), 1e-12);
    const auto num = numeric_gradient([&](const std::vector<double>& x) { return recall_at_k_loss(x, y).value; }, s);
    EXPECT_LE(relative_error(rep.grad, num), kGradTol) << "instance " << t;
  }
}

TEST(RecallAtKLoss, NonIncreasingInPositiveScore) {
  Rng rng(102);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 3 + rng.below(12);
    const auto y = random_labels(rng, n);
    auto s = test::random_vector(rng, n);
    RecallKConfig cfg;
    cfg.temp_rank = 0.1;
    cfg.rank_negatives_only = true;
    const double before = recall_at_k_loss(s, y, cfg).value;
    std::size_t p = rng.below(n);
    while (!y[p]) p = (p + 1) % n;
    s[p] += rng.uniform(0.0, 0.5);
    EXPECT_LE(recall_at_k_loss(s, y, cfg).value, before + 1e-15);
  }
}

TEST(RecallAtKLoss, DefaultFormCanRiseWithAPositiveScore) {
  // both positives buried under three negatives; lifting p0 toward p1 costs p1
  // more membership than p0 gains
  const LabelVector y{1, 1, 0, 0, 0};
  RecallKConfig cfg;
  cfg.ks = {1};
  cfg.temp_rank = 0.1;
  const std::vector<double> before{0.0, 0.15, 0.5, 0.45, 0.4};
  const std::vector<double> after{0.1, 0.15, 0.5, 0.45, 0.4};
  EXPECT_GT(recall_at_k_loss(after, y, cfg).value, recall_at_k_loss(before, y, cfg).value);
  cfg.rank_negatives_only = true;
  EXPECT_LE(recall_at_k_loss(after, y, cfg).value, recall_at_k_loss(before, y, cfg).value);
}

TEST(RecallAtKLoss, NegativesOnlyFiniteDifferences) {
  Rng rng(104);
  RecallKConfig cfg;
  cfg.rank_negatives_only = true;
  cfg.temp_rank = 0.1;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng.below(14);
    const auto y = random_labels(rng, n);
    const auto s = test::random_vector(rng, n);
    const auto rep = recall_at_k_loss(s, y, cfg);
    EXPECT_NEAR(rep.value, recall_reference(s, y, cfg), 1e-12);
    const auto num = numeric_gradient([&](const std::vector<double>& x) { return recall_at_k_loss(x, y, cfg).value; }, s);
    EXPECT_LE(relative_error(rep.grad, num), kGradTol);
  }
}

TEST(RecallAtKLoss, PermutationInvariance) {
  Rng rng(103);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + rng.below(10);
    const auto y = random_labels(rng, n);
    const auto s = test::random_vector(rng, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span<std::size_t>(perm), rng);
    std::vector<double> ps(n);
    LabelVector py(n);
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = s[perm[i]];
      py[i] = y[perm[i]];
    }
    const auto a = recall_at_k_loss(s, y);
    const auto b = recall_at_k_loss(ps, py);
    EXPECT_NEAR(a.value, b.value, 1e-12);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(b.grad[i], a.grad[perm[i]], 1e-9);
  }
}

TEST(RecallAtKLoss, Errors) {
  const std::vector<double> s{0.1, 0.2};
  EXPECT_EQ(code_of([&] { recall_at_k_loss(s, LabelVector{0, 0}); }), Errc::no_positive);
  EXPECT_EQ(code_of([&] { recall_at_k_loss(s, LabelVector{1, 1}); }), Errc::no_negative);
  EXPECT_EQ(code_of([&] { recall_at_k_loss(s, LabelVector{1}); }), Errc::length_mismatch);
  RecallKConfig cfg;
  cfg.ks = {4, 2};
  EXPECT_EQ(code_of([&] { recall_at_k_loss(s, LabelVector{1, 0}, cfg); }), Errc::invalid_argument);
  const std::vector<double> nan{0.1, std::nan("")};
  EXPECT_EQ(code_of([&] { recall_at_k_loss(nan, LabelVector{1, 0}); }), Errc::non_finite);
}

TEST(InfoNce, Examples) {
  const std::vector<double> eq{0.3, 0.3};
  EXPECT_NEAR(info_nce_loss(eq, LabelVector{1, 0}).value, std::log(2.0), 1e-15);
  const std::vector<double> far{10.0, 0.0, -0.5};
  EXPECT_LE(info_nce_loss(far, LabelVector{1, 0, 0}).value, 1e-6);
  EXPECT_EQ(code_of([&] { info_nce_loss(eq, LabelVector{0, 0}); }), Errc::no_positive);
}

TEST(InfoNce, FiniteDifferencesAndShiftInvariance) {
  Rng rng(200);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = t == 0 ? 6 : 2 + rng.below(15);
    auto y = random_labels(rng, n);
    const auto s = test::random_vector(rng, n);
    const auto rep = info_nce_loss(s, y);
    const auto num = numeric_gradient([&](const std::vector<double>& x) { return info_nce_loss(x, y).value; }, s);
    EXPECT_LE(relative_error(rep.grad, num), kGradTol) << "max|g| " << *std::max_element(rep.grad.begin(), rep.grad.end()) << " value " << rep.value;
    auto shifted = s;
    const double c = rng.uniform(-3, 3);
    for (auto& v : shifted) v += c;
    EXPECT_NEAR(info_nce_loss(shifted, y).value, rep.value, 1e-9);
  }
}

TEST(Contrastive, Examples) {
  DescriptorSet far(2);
  far.add("n", normalize(std::vector<double>{-1, 0}));
  const std::vector<double> a{1, 0};
  EXPECT_EQ(contrastive_loss(a, a, far).value, 0.0);
  const std::vector<double> p{0, 1};
  EXPECT_NEAR(contrastive_loss(a, p, far).value, 2.0, 1e-15);
  DescriptorSet empty(2);
  EXPECT_EQ(code_of([&] { contrastive_loss(a, p, empty); }), Errc::empty_negatives);
}

TEST(Contrastive, HardestMatchesBruteForce) {
  Rng rng(300);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + rng.below(8);
    const std::size_t m = 1 + rng.below(64);
    BasicDescriptorSet<double> negs(d);
    for (std::size_t i = 0; i < m; ++i) negs.add("n" + std::to_string(i), normalize(test::random_vector(rng, d)));
    const auto a = test::random_unit(rng, d);
    std::size_t best = 0;
    for (std::size_t i = 1; i < m; ++i) {
      double si = 0, sb = 0;
      for (std::size_t k = 0; k < d; ++k) {
        si += a[k] * negs.row(i)[k];
        sb += a[k] * negs.row(best)[k];
      }
      if (si > sb) best = i;
    }
    EXPECT_EQ(contrastive_loss(a, test::random_unit(rng, d), negs).hardest, best);
  }
}

TEST(Contrastive, FiniteDifferences) {
  Rng rng(301);
  int checked = 0;
  while (checked < 100) {
    const std::size_t d = 2 + rng.below(6);
    const auto a = test::random_unit(rng, d);
    const auto p = test::random_unit(rng, d);
    BasicDescriptorSet<double> negs(d);
    const std::size_t m = 1 + rng.below(6);
    for (std::size_t i = 0; i < m; ++i) negs.add("n" + std::to_string(i), normalize(test::random_vector(rng, d)));
    const double margin = rng.uniform(0.5, 2.0);
    const auto rep = contrastive_loss(a, p, negs, margin);
    const auto n0 = negs.row(rep.hardest);
    const std::vector<double> n(n0.begin(), n0.end());
    const double dist = std::sqrt(std::max(2.0 - 2.0 * dot(std::span<const double>(a), std::span<const double>(n)), 0.0));
    if (std::abs(dist - margin) < 1e-3) continue;  // hinge kink
    // value as a function of (anchor, positive, hardest) with the mined index held fixed
    auto f = [&](const std::vector<double>& x) {
      const auto one = BasicDescriptorSet<double>::from_rows(
          {"h"}, std::vector<double>(x.begin() + 2 * static_cast<long>(d), x.end()), d);
      const std::span<const double> xs(x);
      return contrastive_loss(xs.subspan(0, d), xs.subspan(d, d), one, margin).value;
    };
    const auto num = numeric_gradient(f, concat({a, p, n}));
    const auto ana = concat({rep.grad_anchor, rep.grad_positive, rep.grad_negative});
    EXPECT_LE(relative_error(ana, num), kGradTol);
    ++checked;
  }
}

TEST(SoftmaxMargin, Examples) {
  const std::vector<double> w{1, 0, 0, 1};
  const std::vector<double> e{1, 0};
  EXPECT_NEAR(softmax_margin_loss(e, 0, w).value, std::log1p(std::exp(-16.0)), 1e-15);
  EXPECT_NEAR(softmax_margin_loss(e, 0, w).value, 1.1e-7, 0.05e-7);
  // all cosines equal over 5 classes
  std::vector<double> w5;
  for (int c = 0; c < 5; ++c) w5.insert(w5.end(), {1.0, 0.0});
  EXPECT_NEAR(softmax_margin_loss(e, 3, w5).value, std::log(5.0), 1e-12);
  EXPECT_EQ(code_of([&] { softmax_margin_loss(e, 2, w); }), Errc::index_out_of_range);
}

TEST(SoftmaxMargin, FiniteDifferences) {
  Rng rng(400);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + rng.below(6);
    const std::size_t classes = t == 0 ? 5 : 2 + rng.below(6);
    const std::size_t cls = rng.below(classes);
    const double margin = t % 2 ? 0.0 : rng.uniform(0.0, 0.5);
    const auto e = test::random_unit(rng, d);
    std::vector<double> w;
    for (std::size_t c = 0; c < classes; ++c) {
      const auto r = test::random_unit(rng, d);
      w.insert(w.end(), r.begin(), r.end());
    }
    const auto rep = softmax_margin_loss(e, cls, w, 16.0, margin);
    auto f = [&](const std::vector<double>& x) {
      const std::span<const double> xs(x);
      return softmax_margin_loss(xs.subspan(0, d), cls, xs.subspan(d), 16.0, margin).value;
    };
    const auto num = numeric_gradient(f, concat({e, w}));
    EXPECT_LE(relative_error(concat({rep.grad_embedding, rep.grad_weights}), num), kGradTol);
    // score-level gradient: d value / d cos_c
    std::vector<double> cos(classes);
    for (std::size_t c = 0; c < classes; ++c)
      cos[c] = dot(std::span<const double>(e), std::span<const double>(w).subspan(c * d, d));
    auto g = [&](const std::vector<double>& c) {
      std::vector<double> logits(classes);
      for (std::size_t k = 0; k < classes; ++k) logits[k] = 16.0 * (c[k] - (k == cls ? margin : 0.0));
      double m = *std::max_element(logits.begin(), logits.end()), acc = 0;
      for (double l : logits) acc += std::exp(l - m);
      return m + std::log(acc) - logits[cls];
    };
    EXPECT_LE(relative_error(rep.grad, numeric_gradient(g, cos)), kGradTol);
  }
}
