#pragma once

// Independent reference implementations used only by the tests. None of them
// calls into the code they check beyond reading inputs.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lac/community.hpp"
#include "lac/error.hpp"

namespace oracle {

/// Q by the double sum over every ordered pair (i, j), straight from the
/// definition, with the adjacency read through graph.weight().
inline double literal_modularity(const lac::FriendshipGraph& g,
                                 const std::vector<std::size_t>& community) {
  const std::size_t n = g.node_count();
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += g.weight(i, j);
    two_m += k[i];
  }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (community[i] == community[j]) q += g.weight(i, j) - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

/// Visits every set partition of {0..n-1} as a restricted growth string.
inline void for_each_set_partition(std::size_t n,
                                   const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> labels(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t used) {
    if (pos == n) {
      fn(labels);
      return;
    }
    for (std::size_t c = 0; c <= used && c < n; ++c) {
      labels[pos] = c;
      rec(pos + 1, std::max(used, c + 1));
    }
  };
  if (n == 0) {
    fn(labels);
    return;
  }
  labels[0] = 0;
  rec(1, 1);
}

struct BestPartition {
  std::vector<std::size_t> labels;
  double q = 0.0;
  std::size_t partitions_seen = 0;
};

/// Exhaustive modularity maximum. Rejects graphs over 10 nodes and graphs
/// without edges.
inline BestPartition brute_force_best_partition(const lac::FriendshipGraph& g) {
  if (g.node_count() > 10) throw lac::DataError("brute force limited to 10 nodes");
  if (!(g.total_weight() > 0.0)) throw lac::DataError("modularity undefined for m = 0");
  BestPartition best;
  best.q = -std::numeric_limits<double>::infinity();
  for_each_set_partition(g.node_count(), [&](const std::vector<std::size_t>& labels) {
    ++best.partitions_seen;
    const double q = literal_modularity(g, labels);
    if (q > best.q) {
      best.q = q;
      best.labels = labels;
    }
  });
  return best;
}

/// G(n, p) with unit or random integer weights.
inline lac::FriendshipGraph random_graph(std::size_t n, double p, std::mt19937_64& rng,
                                         bool weighted = false) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("N" + std::to_string(10 + i));
  lac::FriendshipGraph g(ids);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> w(1, 4);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(rng) < p) g.add_edge(i, j, weighted ? w(rng) : 1.0);
    }
  }
  return g;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Straight-line LSTM recurrence over plain vectors. W is row-major
/// 4H x (D + H) with gate blocks i, f, o, g; x[t] has D entries.
struct ScalarLstmResult {
  std::vector<std::vector<double>> h;  // T entries of H
  std::vector<double> c_final;
};

inline ScalarLstmResult scalar_lstm(const std::vector<double>& W, const std::vector<double>& b,
                                    std::size_t D, std::size_t H,
                                    const std::vector<std::vector<double>>& x) {
  std::vector<double> h(H, 0.0), c(H, 0.0);
  ScalarLstmResult out;
  for (const auto& xt : x) {
    std::vector<double> z(4 * H, 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = b[r];
      for (std::size_t j = 0; j < D; ++j) s += W[r * (D + H) + j] * xt[j];
      for (std::size_t j = 0; j < H; ++j) s += W[r * (D + H) + D + j] * h[j];
      z[r] = s;
    }
    std::vector<double> nh(H);
    for (std::size_t u = 0; u < H; ++u) {
      const double ig = sigmoid(z[u]);
      const double fg = sigmoid(z[H + u]);
      const double og = sigmoid(z[2 * H + u]);
      const double gg = std::tanh(z[3 * H + u]);
      c[u] = fg * c[u] + ig * gg;
      nh[u] = og * std::tanh(c[u]);
    }
    h = nh;
    out.h.push_back(h);
  }
  out.c_final = c;
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lac_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
