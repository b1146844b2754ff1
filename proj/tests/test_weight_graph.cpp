#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "oracles.hpp"
#include "taskfuse/data_model.hpp"
#include "taskfuse/errors.hpp"
#include "taskfuse/weight_graph.hpp"

using namespace taskfuse;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = "/tmp/taskfuse_unit_w_" + name;
  std::ofstream out(path);
  out << text;
  return path;
}

// Tasks with 2-sample responses at chosen plane points, all-zero designs.
TaskDataset tasks_at(const std::vector<Eigen::Vector2d>& points) {
  TaskDataset d;
  d.p = 1;
  for (size_t s = 0; s < points.size(); ++s) {
    Task t;
    t.id = "t" + std::to_string(s);
    t.X = Eigen::MatrixXd::Zero(2, 1);
    t.y = points[s];
    d.tasks.push_back(std::move(t));
  }
  return d;
}

}  // namespace

TEST_SUITE("weight_graph") {

TEST_CASE("validate enforces the edge invariants") {
  WeightGraph w;
  w.k = 3;
  w.edges = {{0, 1, 1.0}, {1, 2, 0.5}};
  CHECK_NOTHROW(w.validate());

  w.edges = {{1, 1, 1.0}};
  CHECK_THROWS_AS(w.validate(), ValidationError);
  w.edges = {{1, 0, 1.0}};
  CHECK_THROWS_AS(w.validate(), ValidationError);
  w.edges = {{0, 1, -2.0}};
  CHECK_THROWS_AS(w.validate(), ValidationError);
  w.edges = {{0, 1, 0.0}};
  CHECK_THROWS_AS(w.validate(), ValidationError);
  w.edges = {{0, 3, 1.0}};
  CHECK_THROWS_AS(w.validate(), ValidationError);
  w.edges = {{0, 1, 1.0}, {0, 1, 2.0}};
  CHECK_THROWS_AS(w.validate(), ValidationError);
  w.edges = {{1, 2, 1.0}, {0, 1, 1.0}};  // unsorted
  CHECK_THROWS_AS(w.validate(), ValidationError);
}

TEST_CASE("uniform_weights builds the complete graph") {
  CHECK(uniform_weights(1).edges.empty());
  CHECK(uniform_weights(2).edges.size() == 1);
  const WeightGraph w = uniform_weights(15);
  CHECK(w.edges.size() == 105);
  CHECK(w.k == 15);
  CHECK_NOTHROW(w.validate());
  for (const auto& e : w.edges) CHECK(e.w == 1.0);
}

TEST_CASE("knn ties break toward the lower task index") {
  // d(0,1)=1, d(0,2)=10, d(1,2)=10: with kappa=1 task 2's nearest is a tie
  // between 0 and 1, resolved toward 0.
  const double b = std::sqrt(100.0 - 0.25);
  const TaskDataset d = tasks_at({{0.0, 0.0}, {1.0, 0.0}, {0.5, b}});
  const WeightGraph w = knn_weights(d, 1, 0.0);
  REQUIRE(w.edges.size() == 2);
  CHECK(w.edges[0].s == 0);
  CHECK(w.edges[0].t == 1);
  CHECK(w.edges[1].s == 0);
  CHECK(w.edges[1].t == 2);
  CHECK(w.edges[0].w == 1.0);
  CHECK(w.edges[1].w == 1.0);
}

TEST_CASE("knn with kappa = k-1 and phi 0 gives the uniform graph") {
  std::mt19937_64 rng(3);
  const TaskDataset d = oracle::random_dataset(rng, 5, 4, 2);
  const WeightGraph w = knn_weights(d, 4, 0.0);
  REQUIRE(w.edges.size() == 10);
  for (const auto& e : w.edges) CHECK(e.w == 1.0);
}

TEST_CASE("weights decay monotonically in distance") {
  const TaskDataset d =
      tasks_at({{0.0, 0.0}, {1.0, 0.0}, {2.5, 0.0}, {5.0, 0.0}});
  // phi stays moderate so even the farthest pair keeps a positive weight
  // (exp underflows to zero for large phi * dist^2, which is rejected).
  const WeightGraph w = knn_weights(d, 3, 0.5);
  REQUIRE(w.edges.size() == 6);
  // collect pair distances and weights; weights must decrease as d grows
  std::vector<std::pair<double, double>> dw;
  for (const auto& e : w.edges) {
    const double dist =
        (d.tasks[static_cast<size_t>(e.s)].y - d.tasks[static_cast<size_t>(e.t)].y)
            .norm();
    dw.push_back({dist, e.w});
    CHECK(e.w > 0.0);
    CHECK(e.w <= 1.0);
    CHECK(e.w == doctest::Approx(std::exp(-0.5 * dist * dist)));
  }
  std::sort(dw.begin(), dw.end());
  for (size_t i = 1; i < dw.size(); ++i)
    if (dw[i].first > dw[i - 1].first) CHECK(dw[i].second < dw[i - 1].second);
}

TEST_CASE("knn edge count is bounded by kappa * k") {
  std::mt19937_64 rng(9);
  for (const int kappa : {1, 2, 3}) {
    const TaskDataset d = oracle::random_dataset(rng, 6, 3, 2);
    const WeightGraph w = knn_weights(d, kappa, 0.3);
    CHECK(w.edges.size() <= static_cast<size_t>(kappa * 6));
    CHECK_NOTHROW(w.validate());
  }
}

TEST_CASE("knn output is invariant to task reordering up to relabeling") {
  std::mt19937_64 rng(21);
  const TaskDataset d = oracle::random_dataset(rng, 5, 4, 2);
  TaskDataset dp;
  dp.p = d.p;
  const std::vector<int> perm = {3, 0, 4, 1, 2};  // new index -> old index
  for (const int old : perm) dp.tasks.push_back(d.tasks[static_cast<size_t>(old)]);
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i)
    inv[static_cast<size_t>(perm[i])] = static_cast<int>(i);

  const WeightGraph w = knn_weights(d, 2, 0.4);
  const WeightGraph wp = knn_weights(dp, 2, 0.4);
  REQUIRE(w.edges.size() == wp.edges.size());

  std::vector<std::tuple<int, int, double>> relabeled;
  for (const auto& e : w.edges) {
    int s = inv[static_cast<size_t>(e.s)], t = inv[static_cast<size_t>(e.t)];
    if (s > t) std::swap(s, t);
    relabeled.push_back({s, t, e.w});
  }
  std::sort(relabeled.begin(), relabeled.end());
  for (size_t i = 0; i < wp.edges.size(); ++i) {
    CHECK(std::get<0>(relabeled[i]) == wp.edges[i].s);
    CHECK(std::get<1>(relabeled[i]) == wp.edges[i].t);
    CHECK(std::get<2>(relabeled[i]) == wp.edges[i].w);
  }
}

TEST_CASE("knn rejects invalid inputs") {
  std::mt19937_64 rng(1);
  const TaskDataset d = oracle::random_dataset(rng, 4, 3, 2);
  CHECK_THROWS_AS(knn_weights(d, 0, 0.0), ValidationError);
  CHECK_THROWS_AS(knn_weights(d, 4, 0.0), ValidationError);

  TaskDataset uneq = d;
  uneq.tasks[1].X.conservativeResize(5, 2);
  uneq.tasks[1].X.setOnes();
  uneq.tasks[1].y.conservativeResize(5);
  uneq.tasks[1].y.setOnes();
  CHECK_THROWS_AS(knn_weights(uneq, 2, 0.0), ValidationError);
}

TEST_CASE("load_weights parses, validates, and sorts") {
  SUBCASE("empty file yields the empty graph") {
    const WeightGraph w = load_weights(write_temp("empty.csv", ""), 4);
    CHECK(w.edges.empty());
    CHECK(w.k == 4);
  }
  SUBCASE("single edge with header") {
    const WeightGraph w =
        load_weights(write_temp("one.csv", "s,t,w\n0,1,0.5\n"), 3);
    REQUIRE(w.edges.size() == 1);
    CHECK(w.edges[0].s == 0);
    CHECK(w.edges[0].t == 1);
    CHECK(w.edges[0].w == 0.5);
  }
  SUBCASE("unsorted rows are sorted; zero weights dropped") {
    const WeightGraph w = load_weights(
        write_temp("multi.csv", "1,2,0.25\n0,2,0\n0,1,1.5\n"), 3);
    REQUIRE(w.edges.size() == 2);
    CHECK(w.edges[0].s == 0);
    CHECK(w.edges[0].t == 1);
    CHECK(w.edges[1].s == 1);
    CHECK(w.edges[1].t == 2);
  }
  SUBCASE("violations raise") {
    CHECK_THROWS_AS(load_weights(write_temp("selfpair.csv", "1,1,1\n"), 3),
                    ValidationError);
    CHECK_THROWS_AS(load_weights(write_temp("reversed.csv", "2,1,1\n"), 3),
                    ValidationError);
    CHECK_THROWS_AS(load_weights(write_temp("negw.csv", "0,1,-1\n"), 3),
                    ValidationError);
    CHECK_THROWS_AS(
        load_weights(write_temp("dup.csv", "0,1,1\n0,1,2\n"), 3),
        ValidationError);
    CHECK_THROWS_AS(load_weights(write_temp("range.csv", "0,3,1\n"), 3),
                    ValidationError);
    CHECK_THROWS_AS(load_weights("/tmp/taskfuse_missing_w.csv", 3),
                    ValidationError);
  }
}

}  // TEST_SUITE
