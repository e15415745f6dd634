#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taw/ingest.hpp"

namespace taw {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
using AccountId = std::uint32_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

enum class EdgeKind : std::uint8_t { transaction = 0, self_connection = 1 };

/// Copy of an account inside one snapshot.
struct TasmgNode {
  AccountId account = 0;
  std::uint32_t snapshot = 0;

  auto operator<=>(const TasmgNode&) const = default;
};

struct TasmgEdge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 0.0;
  std::int8_t accessibility = 0;  // snapshot(dst) - snapshot(src); 0 or +1 when stored
  EdgeKind kind = EdgeKind::transaction;

  bool operator==(const TasmgEdge&) const = default;
};

struct BuildOptions {
  std::int64_t epsilon_seconds = 30 * kSecondsPerDay;
  double self_conn_weight = 1.0;
  bool undirected = false;  // add a reversed copy of every transaction edge
};

/// Temporal-amount snapshot multigraph. Immutable once built; safe for
/// concurrent readers.
///
/// Accounts are indexed in lexicographic order of their identifiers. Nodes
/// are ordered by (account, snapshot), so the copies of one account are
/// contiguous and sorted by time. Edge order: transaction edges in input
/// order, then reversed copies (undirected builds), then self-connections
/// ordered by (account, snapshot).
class Tasmg {
 public:
  std::span<const std::string> accounts() const { return accounts_; }
  std::span<const TasmgNode> nodes() const { return nodes_; }
  std::span<const TasmgEdge> edges() const { return edges_; }
  const TasmgEdge& edge(EdgeId e) const { return edges_[e]; }
  const TasmgNode& node(NodeId v) const { return nodes_[v]; }

  /// Ids of the accessible edges L_t(v): outgoing edges with accessibility >= 0,
  /// ordered by destination account, then weight.
  std::span<const EdgeId> accessible(NodeId v) const {
    return {accessible_edges_.data() + accessible_offsets_[v],
            accessible_offsets_[v + 1] - accessible_offsets_[v]};
  }

  /// Node copies of `account` are the contiguous ids [first, last), in snapshot order.
  struct NodeRange {
    NodeId first = 0;
    NodeId last = 0;
    std::size_t size() const { return last - first; }
  };
  NodeRange account_nodes(AccountId account) const {
    return {static_cast<NodeId>(account_offsets_[account]), static_cast<NodeId>(account_offsets_[account + 1])};
  }

  std::optional<AccountId> find_account(std::string_view id) const;
  std::optional<NodeId> find_node(const TasmgNode& node) const;

  std::int64_t epsilon_seconds() const { return options_.epsilon_seconds; }
  const BuildOptions& options() const { return options_; }
  std::int64_t origin_timestamp() const { return origin_; }
  std::uint32_t snapshot_count() const { return snapshot_count_; }
  std::size_t dropped_self_loops() const { return dropped_self_loops_; }

  /// Snapshot difference recomputed from the endpoint nodes.
  int recomputed_accessibility(EdgeId e) const {
    return static_cast<int>(nodes_[edges_[e].dst].snapshot) - static_cast<int>(nodes_[edges_[e].src].snapshot);
  }

 private:
  friend Tasmg build_tasmg(std::span<const Transaction>, const BuildOptions&);
  friend Tasmg tasmg_from_json(const nlohmann::json&);

  void build_index();

  BuildOptions options_;
  std::int64_t origin_ = 0;
  std::uint32_t snapshot_count_ = 0;
  std::size_t dropped_self_loops_ = 0;
  std::vector<std::string> accounts_;
  std::vector<TasmgNode> nodes_;
  std::vector<TasmgEdge> edges_;
  std::vector<std::size_t> account_offsets_;     // into nodes_, size |accounts| + 1
  std::vector<std::size_t> accessible_offsets_;  // size |nodes| + 1
  std::vector<EdgeId> accessible_edges_;
};

/// Snapshot t covers [origin + t*eps, origin + (t+1)*eps) with origin the
/// minimum timestamp. Self-loops are dropped and counted.
Tasmg build_tasmg(std::span<const Transaction> txs, const BuildOptions& options = {});

/// Copies of L_t(v) for the node (account, snapshot). Throws DataError for unknown nodes.
std::vector<TasmgEdge> accessible_edges(const Tasmg& g, const TasmgNode& v);

/// Graph dump: {format, epsilon_seconds, origin, snapshot_count, options,
/// accounts, nodes, edges}. The accessible index is rebuilt on load.
nlohmann::json to_json(const Tasmg& g);
Tasmg tasmg_from_json(const nlohmann::json& j);

}  // namespace taw
