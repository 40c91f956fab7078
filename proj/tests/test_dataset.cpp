#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nscr/dataset.hpp"

#include <algorithm>

using namespace nscr;

namespace {

InteractionTable make_table(int users, int items,
                            std::vector<Interaction> rows) {
  return InteractionTable(users, items, std::move(rows));
}

}  // namespace

TEST_CASE("split: user with 10 interactions, timestamps 1..10") {
  std::vector<Interaction> rows;
  for (int t = 1; t <= 10; ++t) rows.push_back({0, t - 1, t});
  auto table = make_table(1, 10, rows);
  auto split = build_split(table, {0}, 99);

  const auto& us = split.bridge.at(0);
  REQUIRE(us.test.size() == 2);
  std::vector<std::int64_t> test_ts;
  for (int r : us.test) test_ts.push_back(table.rows()[r].timestamp);
  std::sort(test_ts.begin(), test_ts.end());
  CHECK(test_ts == std::vector<std::int64_t>{9, 10});
  CHECK(us.validation.size() == 2);
  CHECK(us.train.size() == 6);
}

TEST_CASE("split: user with 5 interactions gets 1/1/3") {
  std::vector<Interaction> rows;
  for (int t = 1; t <= 5; ++t) rows.push_back({0, t - 1, t});
  auto table = make_table(1, 5, rows);
  auto split = build_split(table, {0}, 1);
  const auto& us = split.bridge.at(0);
  CHECK(us.test.size() == 1);
  CHECK(table.rows()[us.test[0]].timestamp == 5);
  CHECK(us.validation.size() == 1);
  CHECK(us.train.size() == 3);
}

TEST_CASE("split: non-bridge users contribute everything to train") {
  std::vector<Interaction> rows;
  for (int t = 1; t <= 6; ++t) rows.push_back({0, t - 1, t});
  rows.push_back({1, 0, 100});
  rows.push_back({1, 1, 101});
  auto table = make_table(2, 6, rows);
  auto split = build_split(table, {0}, 5);
  CHECK(split.bridge.count(1) == 0);
  // Both of user 1's rows are in the global train list.
  int found = 0;
  for (int r : split.train_rows)
    if (table.rows()[r].user == 1) ++found;
  CHECK(found == 2);
}

TEST_CASE("split: sparse bridge user rejected") {
  std::vector<Interaction> rows{{0, 0, 1}, {0, 1, 2}};
  auto table = make_table(1, 2, rows);
  CHECK_THROWS_AS(build_split(table, {0}, 0), BridgeUserTooSparse);
}

TEST_CASE("split properties: determinism, sizes, latest-test ordering") {
  Rng rng(1234);
  std::uniform_int_distribution<int> nd(5, 40);
  std::uniform_int_distribution<std::int64_t> ts(0, 1000);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = nd(rng);
    std::vector<Interaction> rows;
    std::unordered_set<int> used;
    while (static_cast<int>(rows.size()) < n) {
      int item = std::uniform_int_distribution<int>(0, 99)(rng);
      if (used.insert(item).second) rows.push_back({0, item, ts(rng)});
    }
    auto table = make_table(1, 100, rows);
    auto a = build_split(table, {0}, 7);
    auto b = build_split(table, {0}, 7);
    const auto& ua = a.bridge.at(0);
    const auto& ub = b.bridge.at(0);
    CHECK(ua.test == ub.test);
    CHECK(ua.validation == ub.validation);
    CHECK(ua.train == ub.train);

    // Partition: disjoint and complete.
    std::vector<int> all;
    all.insert(all.end(), ua.train.begin(), ua.train.end());
    all.insert(all.end(), ua.validation.begin(), ua.validation.end());
    all.insert(all.end(), ua.test.begin(), ua.test.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(static_cast<int>(all.size()) == n);

    CHECK(static_cast<int>(ua.test.size()) ==
          static_cast<int>(std::ceil(0.2 * n)));

    std::int64_t max_test = 0, max_rest = -1;
    for (int r : ua.test) max_test = std::max(max_test, table.rows()[r].timestamp);
    for (int r : ua.train) max_rest = std::max(max_rest, table.rows()[r].timestamp);
    for (int r : ua.validation)
      max_rest = std::max(max_rest, table.rows()[r].timestamp);
    CHECK(max_test >= max_rest);
  }
}

TEST_CASE("interaction table rejects duplicates and bad indices") {
  CHECK_THROWS_AS(make_table(2, 2, {{0, 0, 1}, {0, 0, 2}}), DataError);
  CHECK_THROWS_AS(make_table(2, 2, {{0, 5, 1}}), IndexOutOfRange);
}

TEST_CASE("degree_check") {
  SUBCASE("2-node graph, one unit edge") {
    SocialGraph g(2, {{0, 1, 1.0}}, {});
    CHECK(g.degrees()[0] == doctest::Approx(1.0));
    CHECK(g.degrees()[1] == doctest::Approx(1.0));
    CHECK(degree_check(g));
  }
  SUBCASE("3-cycle, unit weights") {
    SocialGraph g(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}, {});
    for (int v = 0; v < 3; ++v) CHECK(g.degrees()[v] == doctest::Approx(2.0));
    CHECK(degree_check(g));
  }
}

TEST_CASE("social graph invariants") {
  SocialGraph g(3, {{0, 1, 2.0}, {1, 2, 0.5}}, {{0, 4}, {2, 7}});
  // Symmetry.
  Matrix dense = Matrix(g.adjacency());
  CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dense.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.bridge_info_users() == std::vector<int>{4, 7});
  CHECK(g.social_index_of(7) == 2);
  CHECK(g.social_index_of(5) == -1);

  CHECK_THROWS_AS(SocialGraph(2, {{0, 1, 1.0}}, {{0, 3}, {1, 3}}), DataError);
  CHECK_THROWS_AS(SocialGraph(2, {{0, 0, 1.0}}, {}), DataError);
  CHECK_THROWS_AS(SocialGraph(2, {{0, 1, -1.0}}, {}), DataError);
}

TEST_CASE("attribute catalog validation") {
  AttributeCatalog c;
  c.num_attributes = 3;
  c.user_attrs = {{0, 2}, {}};
  c.item_attrs = {{1}};
  CHECK_NOTHROW(c.validate());

  c.user_attrs = {{2, 0}};
  CHECK_THROWS_AS(c.validate(), DataError);
  c.user_attrs = {{0, 0}};
  CHECK_THROWS_AS(c.validate(), DataError);
  c.user_attrs = {{0, 5}};
  CHECK_THROWS_AS(c.validate(), IndexOutOfRange);
}
