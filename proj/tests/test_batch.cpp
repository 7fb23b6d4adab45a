#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "ilgen/batch.hpp"
#include "support.hpp"

using namespace ilgen;
using test::code_of;

namespace {

std::vector<InstanceClass> make_classes(std::size_t m, std::size_t n) {
  std::vector<InstanceClass> out;
  for (std::size_t c = 0; c < m; ++c) {
    InstanceClass k{"c" + std::to_string(c), {}};
    for (std::size_t i = 0; i < n; ++i) k.image_ids.push_back(k.class_id + "-n" + std::to_string(i));
    out.push_back(std::move(k));
  }
  return out;
}

std::vector<std::size_t> sizes(const std::vector<BatchPlan>& plans) {
  std::vector<std::size_t> out;
  for (const auto& p : plans) out.push_back(p.entries.size());
  return out;
}

}  // namespace

TEST(BuildEpoch, PartitionArithmetic) {
  EXPECT_EQ(sizes(build_epoch(make_classes(10, 4), 4, 1)), (std::vector<std::size_t>{4, 4, 2}));
  EXPECT_EQ(sizes(build_epoch(make_classes(9, 4), 4, 1)), (std::vector<std::size_t>{4, 4}));
  EXPECT_EQ(sizes(build_epoch(make_classes(8, 4), 4, 1)), (std::vector<std::size_t>{4, 4}));
  EXPECT_EQ(sizes(build_epoch(make_classes(2, 2), 400, 1)), (std::vector<std::size_t>{2}));
}

TEST(BuildEpoch, Determinism) {
  const auto classes = make_classes(50, 4);
  const auto a = build_epoch(classes, 8, 42);
  const auto b = build_epoch(classes, 8, 42);
  const auto c = build_epoch(classes, 8, 43);
  EXPECT_EQ(a, b);
  EXPECT_EQ(format_batch_plans(a), format_batch_plans(b));
  EXPECT_NE(format_batch_plans(a), format_batch_plans(c));
  auto multiset = [](const std::vector<BatchPlan>& plans) {
    std::multiset<std::string> s;
    for (const auto& p : plans)
      for (const auto& e : p.entries) s.insert(e.class_id);
    return s;
  };
  EXPECT_EQ(multiset(a), multiset(c));
}

TEST(BuildEpoch, Errors) {
  EXPECT_EQ(code_of([] { build_epoch(make_classes(1, 4), 4, 0); }), Errc::too_few_classes);
  EXPECT_EQ(code_of([] { build_epoch(make_classes(0, 4), 4, 0); }), Errc::too_few_classes);
  EXPECT_EQ(code_of([] { build_epoch(make_classes(5, 4), 1, 0); }), Errc::invalid_argument);
  auto uneven = make_classes(3, 4);
  uneven[1].image_ids.pop_back();
  EXPECT_EQ(code_of([&] { build_epoch(uneven, 2, 0); }), Errc::invalid_argument);
  auto dup = make_classes(3, 4);
  dup[2].class_id = dup[0].class_id;
  EXPECT_EQ(code_of([&] { build_epoch(dup, 2, 0); }), Errc::invalid_argument);
}

TEST(BatchToTasks, SmallBatch) {
  const auto plans = build_epoch(make_classes(2, 2), 2, 7);
  ASSERT_EQ(plans.size(), 1u);
  const auto tasks = batch_to_tasks(plans[0]);
  ASSERT_EQ(tasks.size(), 2u);
  for (const auto& t : tasks) {
    EXPECT_EQ(t.database.size(), 3u);
    EXPECT_EQ(std::count(t.labels.begin(), t.labels.end(), 1), 1);
  }
}

TEST(BatchToTasks, FullScaleBatch) {
  const auto plans = build_epoch(make_classes(400, 4), 400, 3);
  ASSERT_EQ(plans.size(), 1u);
  EXPECT_EQ(plans[0].image_count(), 1600u);
  const auto tasks = batch_to_tasks(plans[0]);
  ASSERT_EQ(tasks.size(), 400u);
  for (const auto& t : tasks) {
    ASSERT_EQ(t.database.size(), 1599u);
    ASSERT_EQ(std::count(t.labels.begin(), t.labels.end(), 1), 3);
  }
}

TEST(BatchToTasks, InvariantsOverRandomConfigs) {
  Rng rng(99);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = 2 + rng.below(40);
    const std::size_t n = 2 + rng.below(5);
    const std::size_t b = 2 + rng.below(12);
    const auto classes = make_classes(m, n);
    const auto plans = build_epoch(classes, b, rng.next());

    std::multiset<std::string> seen;
    for (const auto& plan : plans) {
      const std::size_t bp = plan.entries.size();
      ASSERT_GE(bp, 2u);
      ASSERT_LE(bp, b);
      ASSERT_EQ(plan.image_count(), n * bp);
      std::set<std::string> batch_images;
      for (const auto& e : plan.entries) {
        seen.insert(e.class_id);
        ASSERT_EQ(classes[e.class_index].class_id, e.class_id);
        batch_images.insert(e.image_ids.begin(), e.image_ids.end());
      }
      const auto tasks = batch_to_tasks(plan);
      ASSERT_EQ(tasks.size(), bp);
      for (const auto& task : tasks) {
        ASSERT_EQ(task.database.size(), n * bp - 1);
        ASSERT_EQ(task.labels.size(), n * bp - 1);
        ASSERT_EQ(static_cast<std::size_t>(std::count(task.labels.begin(), task.labels.end(), 1)), n - 1);
        ASSERT_EQ(static_cast<std::size_t>(std::count(task.labels.begin(), task.labels.end(), 0)), n * (bp - 1));
        ASSERT_EQ(std::find(task.database.begin(), task.database.end(), task.query_id), task.database.end());
        std::set<std::string> all(task.database.begin(), task.database.end());
        all.insert(task.query_id);
        ASSERT_EQ(all, batch_images);
        const auto& entry = plan.entries[task.entry];
        for (std::size_t i = 0; i < task.database.size(); ++i) {
          const bool same = std::find(entry.image_ids.begin(), entry.image_ids.end(), task.database[i]) !=
                            entry.image_ids.end();
          ASSERT_EQ(task.labels[i], same ? 1 : 0);
        }
      }
    }
    // every class at most once; at most one dropped
    std::set<std::string> unique(seen.begin(), seen.end());
    ASSERT_EQ(unique.size(), seen.size());
    ASSERT_GE(seen.size() + 1, m);
    ASSERT_EQ(m - seen.size(), m % b == 1 ? 1u : 0u);
  }
}

TEST(BatchPlan, QueryChoiceVariesAcrossEpochSeeds) {
  const auto classes = make_classes(6, 4);
  std::set<std::size_t> query_indices;
  for (std::uint64_t s = 0; s < 20; ++s)
    for (const auto& p : build_epoch(classes, 6, s))
      for (const auto& e : p.entries)
        if (e.class_id == "c0") query_indices.insert(e.query_index);
  EXPECT_GT(query_indices.size(), 1u);
}

TEST(BatchPlan, ValidateRejectsBrokenPlans) {
  auto plan = build_epoch(make_classes(3, 3), 3, 1).front();
  auto dup = plan;
  dup.entries[1].class_id = dup.entries[0].class_id;
  EXPECT_EQ(code_of([&] { batch_to_tasks(dup); }), Errc::invalid_plan);
  auto bad_q = plan;
  bad_q.entries[0].query_index = 3;
  EXPECT_EQ(code_of([&] { batch_to_tasks(bad_q); }), Errc::invalid_plan);
  auto single = plan;
  single.entries.resize(1);
  EXPECT_EQ(code_of([&] { batch_to_tasks(single); }), Errc::invalid_plan);
}

TEST(BatchPlan, DumpFormat) {
  BatchPlan p{0, 5, {{0, "a", {"a0", "a1"}, 1}, {1, "b", {"b0", "b1"}, 0}}};
  const std::vector<BatchPlan> plans{p};
  EXPECT_EQ(format_batch_plans(plans), "0\ta:a1/a0,a1\tb:b0/b0,b1\n");
}
