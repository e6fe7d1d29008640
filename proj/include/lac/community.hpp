#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lac/logparse.hpp"

namespace lac {

/// Undirected weighted graph over employees. Nodes are kept in ascending id
/// order; that order is also the Louvain visiting order. Immutable once
/// built, apart from add_edge during construction.
class FriendshipGraph {
 public:
  struct Edge {
    std::size_t to;
    double weight;
  };

  FriendshipGraph() = default;
  explicit FriendshipGraph(std::vector<std::string> node_ids);

  /// Adds `weight` to A(a, b) and A(b, a). Self-loops are ignored.
  void add_edge(std::size_t a, std::size_t b, double weight = 1.0);

  std::size_t node_count() const { return ids_.size(); }
  const std::vector<std::string>& node_ids() const { return ids_; }
  std::optional<std::size_t> index_of(const std::string& id) const;

  double weight(std::size_t a, std::size_t b) const;
  /// Neighbours sorted by index.
  std::span<const Edge> neighbours(std::size_t node) const { return adjacency_[node]; }
  double degree(std::size_t node) const { return degree_[node]; }
  /// m = half the sum of all A(i, j).
  double total_weight() const { return total_weight_; }

 private:
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<Edge>> adjacency_;
  std::vector<double> degree_;
  double total_weight_ = 0.0;
};

/// Resolves an address to an internal employee id: the part before '@' (or
/// the whole string) if it is in `internal_ids`.
std::optional<std::string> internal_id_of(const std::string& address,
                                          const std::set<std::string>& internal_ids);

/// Each sender->recipient occurrence between two internal employees adds 1.
FriendshipGraph build_friendship_graph(std::span<const EmailEdgeRecord> emails,
                                       const std::set<std::string>& internal_ids);

/// Non-overlapping community assignment, dense indices 0..community_count-1.
struct Partition {
  std::vector<std::size_t> assignment;  // indexed by node
  std::size_t community_count = 0;

  /// Renumbers labels densely in order of first appearance.
  static Partition from_labels(std::span<const std::size_t> labels);
  static Partition single_block(std::size_t nodes);
  static Partition singletons(std::size_t nodes);

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Q = 1/2m sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j). Throws DataError when
/// m = 0 or the partition does not cover the graph.
double modularity(const FriendshipGraph& graph, const Partition& partition);

/// Progress record of one louvain() run.
struct LouvainTrace {
  std::vector<double> sweep_q;  // tracked Q after every local-moving sweep
  std::vector<double> level_q;  // Q at the end of each level
  std::size_t levels = 0;
  double final_q = 0.0;         // tracked value, not recomputed
};

/// Two-phase Louvain (local moving + aggregation). Deterministic: nodes are
/// visited in index order, a move needs a strictly positive gain and ties
/// go to the lowest community index. Isolated nodes become singletons
/// numbered after all other communities. Throws DataError when m = 0.
Partition louvain(const FriendshipGraph& graph, LouvainTrace* trace = nullptr);

/// Normalized mutual information 2 I(X;Y) / (H(X) + H(Y)); 1 when both
/// labelings are constant.
double normalized_mutual_information(std::span<const std::size_t> a,
                                     std::span<const std::size_t> b);

/// partition.json: employee id -> community index.
inline constexpr int kPartitionFormatVersion = 1;
void write_partition(const FriendshipGraph& graph, const Partition& partition,
                     double q, const std::filesystem::path& path);
/// Returns employee id -> community index.
std::map<std::string, std::size_t> read_partition(const std::filesystem::path& path);

/// Tab-separated `a b weight` lines, one per undirected edge.
void write_edge_list(const FriendshipGraph& graph, const std::filesystem::path& path);

}  // namespace lac
