#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taw/rng.hpp"
#include "taw/tasmg.hpp"

namespace taw {

enum class AmountStrategy { aus, abs, als };
enum class WalkMode { taw, static_uniform, static_node2vec };

std::string_view to_string(AmountStrategy s);
std::string_view to_string(WalkMode m);
AmountStrategy parse_amount_strategy(std::string_view text);  // "aus" | "abs" | "als", any case
WalkMode parse_walk_mode(std::string_view text);              // "taw" | "static_uniform" | "static_node2vec"

inline constexpr double kMinAlpha = 0.1;
inline constexpr double kMaxAlpha = 0.9;

struct WalkConfig {
  std::uint32_t walks_per_node = 10;
  std::uint32_t walk_length = 80;  // edge traversals
  double alpha = 0.5;
  AmountStrategy amount_strategy = AmountStrategy::aus;
  WalkMode mode = WalkMode::taw;
  double p = 1.0;  // static_node2vec return parameter
  double q = 1.0;  // static_node2vec in-out parameter
  std::uint64_t seed = 42;
  unsigned threads = 1;  // 0 = hardware concurrency; output does not depend on it

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
  nlohmann::json to_json() const;
};

// Transition laws over the accessible edges of one node. All three throw
// Error on an empty edge set and return a distribution aligned with `edges`.

/// alpha on edges crossing to the next snapshot, 1 - alpha on edges staying, normalized.
std::vector<double> temporal_prob(std::span<const TasmgEdge> edges, double alpha);
/// AUS uniform; ABS proportional to weight; ALS proportional to the ascending
/// weight rank (1 = smallest, ties share their mean rank).
std::vector<double> amount_prob(std::span<const TasmgEdge> edges, AmountStrategy strategy);
/// Normalized product of temporal_prob and amount_prob.
std::vector<double> joint_prob(std::span<const TasmgEdge> edges, double alpha, AmountStrategy strategy);

/// Per-node alias tables for the joint law, aligned with Tasmg::accessible.
class TransitionTable {
 public:
  TransitionTable() = default;
  TransitionTable(const Tasmg& g, const WalkConfig& cfg);

  bool has(NodeId v) const { return offsets_[v + 1] > offsets_[v]; }
  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  /// Sampled edge id leaving v; v must have a nonempty table.
  EdgeId sample(NodeId v, Rng& rng) const;

  /// Exact distribution encoded by v's table, ordered like Tasmg::accessible(v).
  std::vector<double> distribution(NodeId v) const;

  bool operator==(const TransitionTable&) const = default;

 private:
  std::span<const double> prob(NodeId v) const { return {prob_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]}; }
  std::span<const std::uint32_t> alias(NodeId v) const {
    return {alias_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

  std::vector<std::size_t> offsets_;
  std::vector<EdgeId> edges_;
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

TransitionTable build_transition_table(const Tasmg& g, const WalkConfig& cfg);

/// Accounts merged over all snapshots, direction and parallel edges collapsed.
class StaticGraph {
 public:
  explicit StaticGraph(const Tasmg& g);

  std::size_t size() const { return adjacency_.size(); }
  std::span<const AccountId> neighbors(AccountId a) const { return adjacency_[a]; }
  bool adjacent(AccountId a, AccountId b) const;

 private:
  std::vector<std::vector<AccountId>> adjacency_;  // sorted
};

/// Step-by-step record of one TAW walk for replay checks.
struct WalkTrace {
  NodeId start = 0;
  std::vector<EdgeId> edges;           // every traversed edge, self-connections included
  std::vector<std::uint32_t> snapshots;  // snapshot of each emitted token
};

/// One TAW walk for (account, walk_index); tokens are account ids.
std::vector<AccountId> taw_walk(const Tasmg& g, const TransitionTable& table, const WalkConfig& cfg,
                                AccountId account, std::uint32_t walk_index, WalkTrace* trace = nullptr);

/// One static (DeepWalk or node2vec) walk for (account, walk_index).
std::vector<AccountId> static_walk(const StaticGraph& g, const WalkConfig& cfg, AccountId account,
                                   std::uint32_t walk_index);

/// Walk corpus. Tokens are indices into `vocabulary`.
struct WalkCorpus {
  std::vector<std::string> vocabulary;
  std::vector<std::vector<std::uint32_t>> walks;
  /// Snapshot index of every token, parallel to `walks`; empty for static walks.
  std::vector<std::vector<std::uint32_t>> snapshots;
  WalkConfig config;

  bool has_snapshots() const { return !snapshots.empty(); }
  std::size_t token_count() const;
  bool operator==(const WalkCorpus& other) const {
    return vocabulary == other.vocabulary && walks == other.walks && snapshots == other.snapshots;
  }
};

/// walks_per_node walks for every account, sorted by (account, walk index);
/// walks with fewer than two tokens are discarded.
WalkCorpus generate_walks(const Tasmg& g, const WalkConfig& cfg);

// Corpus text: one walk per line, space separated identifiers. Lines starting
// with '#' are comments. The snapshot sidecar has the same shape with
// snapshot indices in place of identifiers.
void write_corpus(std::ostream& out, const WalkCorpus& corpus, std::span<const std::string> comments = {});
void write_corpus_snapshots(std::ostream& out, const WalkCorpus& corpus);
WalkCorpus read_corpus(std::istream& in);
void read_corpus_snapshots(std::istream& in, WalkCorpus& corpus);

}  // namespace taw
