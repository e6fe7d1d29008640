#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "lac/community.hpp"
#include "lac/error.hpp"
#include "oracles.hpp"

using namespace lac;

namespace {

FriendshipGraph graph_of(std::size_t n, std::initializer_list<std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("N" + std::to_string(10 + i));
  FriendshipGraph g(ids);
  for (auto [a, b] : edges) g.add_edge(a, b);
  return g;
}

FriendshipGraph two_triangles() {
  return graph_of(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
}

Partition labels(std::vector<std::size_t> l) { return Partition::from_labels(l); }

}  // namespace

TEST_CASE("friendship graph from email records") {
  const std::set<std::string> ids = {"A", "B", "C"};
  const auto empty = build_friendship_graph({}, ids);
  CHECK(empty.node_count() == 3);
  CHECK(empty.total_weight() == 0.0);
  CHECK_THROWS_AS(louvain(empty), DataError);
  CHECK_THROWS_AS(modularity(empty, Partition::single_block(3)), DataError);

  const std::vector<EmailEdgeRecord> one = {{"A@dtaa.test", {"B@dtaa.test"}, {}}};
  const auto g1 = build_friendship_graph(one, ids);
  CHECK(g1.weight(0, 1) == 1.0);
  CHECK(g1.weight(1, 0) == 1.0);
  CHECK(g1.total_weight() == 1.0);

  const std::vector<EmailEdgeRecord> ext = {
      {"A@dtaa.test", {"B@dtaa.test", "x@example.net", "A@dtaa.test"}, {}},
      {"x@example.net", {"C@dtaa.test"}, {}},
      {"C", {"B"}, {}}};
  const auto g2 = build_friendship_graph(ext, ids);
  CHECK(g2.weight(0, 1) == 1.0);
  CHECK(g2.weight(0, 0) == 0.0);
  CHECK(g2.weight(1, 2) == 1.0);
  CHECK(g2.weight(0, 2) == 0.0);
  CHECK(g2.total_weight() == 2.0);
}

TEST_CASE("modularity hand-evaluated values") {
  const auto tri = graph_of(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(modularity(tri, Partition::singletons(3)) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(modularity(tri, Partition::single_block(3)) == doctest::Approx(0.0).epsilon(1e-12));
  const auto g = two_triangles();
  CHECK(modularity(g, labels({0, 0, 0, 1, 1, 1})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(oracle::literal_modularity(g, {0, 0, 0, 1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("one-block modularity is zero on random graphs") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  while (checked < 100) {
    const auto g = oracle::random_graph(3 + rng() % 20, 0.3, rng, checked % 2 == 1);
    if (g.total_weight() == 0.0) continue;
    CHECK(std::abs(modularity(g, Partition::single_block(g.node_count()))) < 1e-12);
    ++checked;
  }
}

TEST_CASE("modularity agrees with the literal double sum") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_graph(2 + rng() % 12, 0.4, rng, true);
    if (g.total_weight() == 0.0) continue;
    std::vector<std::size_t> l(g.node_count());
    for (auto& x : l) x = rng() % 3;
    CHECK(modularity(g, labels(l)) ==
          doctest::Approx(oracle::literal_modularity(g, l)).epsilon(1e-12));
  }
}

TEST_CASE("brute-force oracle values") {
  std::size_t count = 0;
  oracle::for_each_set_partition(6, [&](const std::vector<std::size_t>&) { ++count; });
  CHECK(count == 203);  // Bell number B6

  const auto best = oracle::brute_force_best_partition(two_triangles());
  CHECK(best.partitions_seen == 203);
  CHECK(best.q == doctest::Approx(0.5).epsilon(1e-12));

  const auto edge = oracle::brute_force_best_partition(graph_of(2, {{0, 1}}));
  CHECK(edge.q == doctest::Approx(0.0));
  CHECK(modularity(graph_of(2, {{0, 1}}), Partition::singletons(2)) == doctest::Approx(-0.5));

  CHECK_THROWS_AS(oracle::brute_force_best_partition(graph_of(3, {})), DataError);
  CHECK_THROWS_AS(oracle::brute_force_best_partition(graph_of(11, {{0, 1}})), DataError);
}

TEST_CASE("louvain on small fixed graphs") {
  LouvainTrace trace;
  const auto p = louvain(two_triangles(), &trace);
  CHECK(p == labels({0, 0, 0, 1, 1, 1}));
  CHECK(trace.final_q == doctest::Approx(0.5).epsilon(1e-12));

  const auto clique = graph_of(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {1, 4},
                                   {2, 3}, {2, 4}, {3, 4}});
  CHECK(louvain(clique).community_count == 1);
  CHECK(oracle::brute_force_best_partition(clique).labels ==
        std::vector<std::size_t>(5, 0));

  // Isolated node 4 becomes a trailing singleton.
  const auto iso = graph_of(5, {{0, 1}, {2, 3}});
  const auto pi = louvain(iso);
  CHECK(pi.community_count == 3);
  CHECK(pi.assignment[4] == 2);
}

TEST_CASE("louvain against exhaustive search on random small graphs") {
  std::mt19937_64 rng(7);
  int graphs = 0, near_optimal = 0;
  while (graphs < 50) {
    const std::size_t n = 2 + rng() % 7;
    const auto g = oracle::random_graph(n, 0.45, rng, graphs % 3 == 0);
    if (g.total_weight() == 0.0) continue;
    ++graphs;
    LouvainTrace trace;
    const auto p = louvain(g, &trace);
    const double recomputed = modularity(g, p);
    const auto best = oracle::brute_force_best_partition(g);
    CHECK(std::abs(trace.final_q - recomputed) < 1e-9);
    CHECK(recomputed <= best.q + 1e-12);
    CHECK(recomputed >= modularity(g, Partition::single_block(n)) - 1e-12);
    CHECK(recomputed >= modularity(g, Partition::singletons(n)) - 1e-12);
    for (std::size_t i = 1; i < trace.sweep_q.size(); ++i) {
      CHECK(trace.sweep_q[i] >= trace.sweep_q[i - 1] - 1e-12);
    }
    for (std::size_t i = 1; i < trace.level_q.size(); ++i) {
      CHECK(trace.level_q[i] >= trace.level_q[i - 1] - 1e-12);
    }
    if (recomputed >= 0.95 * best.q - 1e-12) ++near_optimal;
  }
  MESSAGE("louvain within 95% of optimum on " << near_optimal << " of " << graphs << " graphs");
  CHECK(near_optimal >= 45);
}

TEST_CASE("partition labels are dense") {
  const std::vector<std::size_t> raw = {7, 7, 2, 9, 2};
  const auto p = Partition::from_labels(raw);
  CHECK(p.assignment == std::vector<std::size_t>{0, 0, 1, 2, 1});
  CHECK(p.community_count == 3);
}

TEST_CASE("normalized mutual information") {
  const std::vector<std::size_t> a = {0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> relabelled = {5, 5, 3, 3, 4, 4};
  CHECK(normalized_mutual_information(a, relabelled) == doctest::Approx(1.0));
  const std::vector<std::size_t> constant(6, 0);
  CHECK(normalized_mutual_information(constant, constant) == doctest::Approx(1.0));
  CHECK(normalized_mutual_information(a, constant) == doctest::Approx(0.0));
  // Independent halves: X = {0,0,1,1}, Y = {0,1,0,1} share no information.
  const std::vector<std::size_t> x = {0, 0, 1, 1}, y = {0, 1, 0, 1};
  CHECK(normalized_mutual_information(x, y) == doctest::Approx(0.0));
}

TEST_CASE("partition file round trip") {
  const auto dir = oracle::scratch_dir("partition");
  const auto g = two_triangles();
  const auto p = louvain(g);
  write_partition(g, p, 0.5, dir / "p.json");
  const auto back = read_partition(dir / "p.json");
  REQUIRE(back.size() == 6);
  CHECK(back.at("N10") == 0);
  CHECK(back.at("N15") == 1);
  write_edge_list(g, dir / "e.tsv");
  std::ifstream in(dir / "e.tsv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 6);
  CHECK_THROWS_AS(read_partition(dir / "missing.json"), DataError);
}
