#include "lac/community.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "lac/error.hpp"

namespace lac {

FriendshipGraph::FriendshipGraph(std::vector<std::string> node_ids)
    : ids_(std::move(node_ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = i;
  adjacency_.resize(ids_.size());
  degree_.assign(ids_.size(), 0.0);
}

void FriendshipGraph::add_edge(std::size_t a, std::size_t b, double weight) {
  if (a == b || weight == 0.0) return;
  if (weight < 0.0) throw DataError("negative edge weight");
  auto bump = [weight](std::vector<Edge>& list, std::size_t to) {
    auto it = std::lower_bound(list.begin(), list.end(), to,
                               [](const Edge& e, std::size_t n) { return e.to < n; });
    if (it != list.end() && it->to == to) {
      it->weight += weight;
    } else {
      list.insert(it, Edge{to, weight});
    }
  };
  bump(adjacency_.at(a), b);
  bump(adjacency_.at(b), a);
  degree_[a] += weight;
  degree_[b] += weight;
  total_weight_ += weight;
}

std::optional<std::size_t> FriendshipGraph::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double FriendshipGraph::weight(std::size_t a, std::size_t b) const {
  const auto& list = adjacency_.at(a);
  auto it = std::lower_bound(list.begin(), list.end(), b,
                             [](const Edge& e, std::size_t n) { return e.to < n; });
  return (it != list.end() && it->to == b) ? it->weight : 0.0;
}

std::optional<std::string> internal_id_of(const std::string& address,
                                          const std::set<std::string>& internal_ids) {
  const auto at = address.find('@');
  std::string local = address.substr(0, at);
  if (internal_ids.count(local)) return local;
  return std::nullopt;
}

FriendshipGraph build_friendship_graph(std::span<const EmailEdgeRecord> emails,
                                       const std::set<std::string>& internal_ids) {
  FriendshipGraph graph({internal_ids.begin(), internal_ids.end()});
  for (const auto& mail : emails) {
    const auto from = internal_id_of(mail.from, internal_ids);
    if (!from) continue;
    const std::size_t a = *graph.index_of(*from);
    for (const auto& recipient : mail.recipients) {
      const auto to = internal_id_of(recipient, internal_ids);
      if (!to || *to == *from) continue;
      graph.add_edge(a, *graph.index_of(*to), 1.0);
    }
  }
  return graph;
}

Partition Partition::from_labels(std::span<const std::size_t> labels) {
  Partition p;
  std::unordered_map<std::size_t, std::size_t> dense;
  p.assignment.reserve(labels.size());
  for (std::size_t label : labels) {
    auto [it, inserted] = dense.try_emplace(label, dense.size());
    p.assignment.push_back(it->second);
  }
  p.community_count = dense.size();
  return p;
}

Partition Partition::single_block(std::size_t nodes) {
  return Partition{std::vector<std::size_t>(nodes, 0), nodes > 0 ? 1u : 0u};
}

Partition Partition::singletons(std::size_t nodes) {
  Partition p;
  for (std::size_t i = 0; i < nodes; ++i) p.assignment.push_back(i);
  p.community_count = nodes;
  return p;
}

double modularity(const FriendshipGraph& graph, const Partition& partition) {
  const double m = graph.total_weight();
  if (!(m > 0.0)) throw DataError("modularity is undefined for a graph with m = 0");
  if (partition.assignment.size() != graph.node_count()) {
    throw DataError("partition does not cover the graph");
  }
  std::vector<double> internal(partition.community_count, 0.0);
  std::vector<double> total(partition.community_count, 0.0);
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const std::size_t c = partition.assignment[i];
    if (c >= partition.community_count) throw DataError("partition label out of range");
    total[c] += graph.degree(i);
    for (const auto& e : graph.neighbours(i)) {
      if (partition.assignment[e.to] == c) internal[c] += e.weight;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < partition.community_count; ++c) {
    const double share = total[c] / (2.0 * m);
    q += internal[c] / (2.0 * m) - share * share;
  }
  return q;
}

namespace {

// Working graph of one Louvain level. A self-loop entry holds A_ii, i.e. the
// doubly-counted internal weight of the community the super-node replaced.
struct LevelGraph {
  std::vector<std::vector<FriendshipGraph::Edge>> adjacency;  // no self entries
  std::vector<double> self_loop;
  std::vector<double> degree;

  std::size_t size() const { return self_loop.size(); }
};

constexpr double kMinGain = 1e-12;

double level_modularity(const LevelGraph& g, const std::vector<std::size_t>& comm,
                        std::size_t communities, double m) {
  std::vector<double> internal(communities, 0.0), total(communities, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    internal[comm[i]] += g.self_loop[i];
    total[comm[i]] += g.degree[i];
    for (const auto& e : g.adjacency[i]) {
      if (comm[e.to] == comm[i]) internal[comm[i]] += e.weight;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < communities; ++c) {
    const double share = total[c] / (2.0 * m);
    q += internal[c] / (2.0 * m) - share * share;
  }
  return q;
}

// Local moving phase. Returns the number of moves; `q` is updated
// incrementally with the exact gain of every move.
std::size_t local_moving(const LevelGraph& g, double m, std::vector<std::size_t>& comm,
                         double& q, LouvainTrace* trace) {
  const std::size_t n = g.size();
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) total[comm[i]] += g.degree[i];

  std::vector<double> link(n, 0.0);  // weight from node i into each community
  std::vector<std::size_t> touched;
  std::size_t moves = 0;
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t from = comm[i];
      const double k = g.degree[i];
      touched.clear();
      for (const auto& e : g.adjacency[i]) {
        if (link[comm[e.to]] == 0.0) touched.push_back(comm[e.to]);
        link[comm[e.to]] += e.weight;
      }
      total[from] -= k;
      // Gain of inserting the (removed) node into community c.
      auto gain = [&](std::size_t c) {
        return link[c] / m - k * total[c] / (2.0 * m * m);
      };
      const double stay = gain(from);
      std::sort(touched.begin(), touched.end());
      std::size_t best = from;
      double best_gain = stay;
      for (std::size_t c : touched) {
        if (c != from && gain(c) - best_gain > kMinGain) {
          best = c;
          best_gain = gain(c);
        }
      }
      total[best] += k;
      if (best != from) {
        comm[i] = best;
        q += best_gain - stay;
        ++moves;
        improved = true;
      }
      for (std::size_t c : touched) link[c] = 0.0;
    }
    if (trace) trace->sweep_q.push_back(q);
  }
  return moves;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<std::size_t>& comm,
                     std::size_t communities) {
  LevelGraph out;
  out.adjacency.resize(communities);
  out.self_loop.assign(communities, 0.0);
  out.degree.assign(communities, 0.0);
  std::vector<std::map<std::size_t, double>> links(communities);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t c = comm[i];
    out.self_loop[c] += g.self_loop[i];
    out.degree[c] += g.degree[i];
    for (const auto& e : g.adjacency[i]) {
      const std::size_t d = comm[e.to];
      if (d == c) {
        out.self_loop[c] += e.weight;
      } else {
        links[c][d] += e.weight;
      }
    }
  }
  for (std::size_t c = 0; c < communities; ++c) {
    for (const auto& [d, w] : links[c]) out.adjacency[c].push_back({d, w});
  }
  return out;
}

// Dense renumbering in order of first appearance.
std::size_t renumber(std::vector<std::size_t>& labels) {
  std::unordered_map<std::size_t, std::size_t> dense;
  for (auto& l : labels) l = dense.try_emplace(l, dense.size()).first->second;
  return dense.size();
}

}  // namespace

Partition louvain(const FriendshipGraph& graph, LouvainTrace* trace) {
  const double m = graph.total_weight();
  if (!(m > 0.0)) throw DataError("louvain requires a graph with m > 0");

  // Level 0 holds only nodes with at least one edge.
  std::vector<std::size_t> active;
  std::vector<std::size_t> local_index(graph.node_count(), SIZE_MAX);
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    if (graph.degree(i) > 0.0) {
      local_index[i] = active.size();
      active.push_back(i);
    }
  }
  LevelGraph level;
  level.adjacency.resize(active.size());
  level.self_loop.assign(active.size(), 0.0);
  for (std::size_t li = 0; li < active.size(); ++li) {
    level.degree.push_back(graph.degree(active[li]));
    for (const auto& e : graph.neighbours(active[li])) {
      level.adjacency[li].push_back({local_index[e.to], e.weight});
    }
  }

  std::vector<std::size_t> membership(active.size());  // active node -> level node
  for (std::size_t i = 0; i < membership.size(); ++i) membership[i] = i;

  std::vector<std::size_t> comm(level.size());
  for (std::size_t i = 0; i < comm.size(); ++i) comm[i] = i;
  double q = level_modularity(level, comm, comm.size(), m);

  while (true) {
    for (std::size_t i = 0; i < comm.size(); ++i) comm[i] = i;
    const std::size_t moves = local_moving(level, m, comm, q, trace);
    if (trace) {
      trace->level_q.push_back(q);
      ++trace->levels;
    }
    if (moves == 0) break;
    const std::size_t communities = renumber(comm);
    for (auto& node : membership) node = comm[node];
    level = aggregate(level, comm, communities);
    comm.resize(communities);
  }
  if (trace) trace->final_q = q;

  std::vector<std::size_t> labels(graph.node_count(), SIZE_MAX);
  for (std::size_t li = 0; li < active.size(); ++li) labels[active[li]] = membership[li];
  Partition out;
  out.assignment.assign(graph.node_count(), 0);
  std::unordered_map<std::size_t, std::size_t> dense;
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    if (labels[i] != SIZE_MAX) {
      out.assignment[i] = dense.try_emplace(labels[i], dense.size()).first->second;
    }
  }
  out.community_count = dense.size();
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    if (labels[i] == SIZE_MAX) out.assignment[i] = out.community_count++;
  }
  return out;
}

double normalized_mutual_information(std::span<const std::size_t> a,
                                     std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw DataError("NMI needs labelings of equal length");
  const double n = static_cast<double>(a.size());
  if (a.empty()) return 1.0;
  std::map<std::size_t, double> ca, cb;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    joint[{a[i], b[i]}] += 1;
  }
  auto entropy = [n](const std::map<std::size_t, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca), hb = entropy(cb);
  if (ha + hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log(c * n / (ca[key.first] * cb[key.second]));
  }
  return 2.0 * mi / (ha + hb);
}

void write_partition(const FriendshipGraph& graph, const Partition& partition,
                     double q, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["format"] = "lac-partition";
  doc["version"] = kPartitionFormatVersion;
  doc["modularity"] = q;
  doc["community_count"] = partition.community_count;
  nlohmann::ordered_json assignment = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    assignment[graph.node_ids()[i]] = partition.assignment[i];
  }
  doc["assignment"] = assignment;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::map<std::string, std::size_t> read_partition(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.at("format") != "lac-partition" ||
        doc.at("version").get<int>() != kPartitionFormatVersion) {
      throw DataError(path.string() + ": not a version-1 partition file");
    }
    return doc.at("assignment").get<std::map<std::string, std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_edge_list(const FriendshipGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    for (const auto& e : graph.neighbours(i)) {
      if (e.to > i) {
        out << graph.node_ids()[i] << '\t' << graph.node_ids()[e.to] << '\t'
            << e.weight << '\n';
      }
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace lac
