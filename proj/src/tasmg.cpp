#include "taw/tasmg.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "taw/error.hpp"

namespace taw {

namespace {

constexpr std::string_view kDumpFormat = "tasmg-v1";

void check_options(const BuildOptions& options) {
  if (options.epsilon_seconds <= 0) throw ConfigError("epsilon must be > 0");
  if (!(options.self_conn_weight > 0.0)) throw ConfigError("self_conn_weight must be > 0");
}

}  // namespace

std::optional<AccountId> Tasmg::find_account(std::string_view id) const {
  const auto it = std::lower_bound(accounts_.begin(), accounts_.end(), id);
  if (it == accounts_.end() || *it != id) return std::nullopt;
  return static_cast<AccountId>(it - accounts_.begin());
}

std::optional<NodeId> Tasmg::find_node(const TasmgNode& node) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end() || *it != node) return std::nullopt;
  return static_cast<NodeId>(it - nodes_.begin());
}

void Tasmg::build_index() {
  account_offsets_.assign(accounts_.size() + 1, 0);
  for (const auto& n : nodes_) ++account_offsets_[n.account + 1];
  for (std::size_t a = 0; a < accounts_.size(); ++a) account_offsets_[a + 1] += account_offsets_[a];

  accessible_offsets_.assign(nodes_.size() + 1, 0);
  for (const auto& e : edges_) {
    if (e.accessibility >= 0) ++accessible_offsets_[e.src + 1];
  }
  for (std::size_t v = 0; v < nodes_.size(); ++v) accessible_offsets_[v + 1] += accessible_offsets_[v];

  accessible_edges_.assign(accessible_offsets_.back(), 0);
  std::vector<std::size_t> fill(accessible_offsets_.begin(), accessible_offsets_.end() - 1);
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    if (edges_[e].accessibility >= 0) accessible_edges_[fill[edges_[e].src]++] = e;
  }

  auto key = [this](EdgeId e) {
    const auto& edge = edges_[e];
    return std::make_tuple(nodes_[edge.dst].account, edge.weight, edge.kind, e);
  };
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    std::sort(accessible_edges_.begin() + static_cast<std::ptrdiff_t>(accessible_offsets_[v]),
              accessible_edges_.begin() + static_cast<std::ptrdiff_t>(accessible_offsets_[v + 1]),
              [&](EdgeId a, EdgeId b) { return key(a) < key(b); });
  }
}

Tasmg build_tasmg(std::span<const Transaction> txs, const BuildOptions& options) {
  check_options(options);
  if (txs.empty()) throw DataError("cannot build a graph from an empty transaction list");

  Tasmg g;
  g.options_ = options;

  std::int64_t min_ts = txs.front().timestamp, max_ts = txs.front().timestamp;
  double min_positive = 0.0;
  for (const auto& tx : txs) {
    min_ts = std::min(min_ts, tx.timestamp);
    max_ts = std::max(max_ts, tx.timestamp);
    if (tx.is_self_loop()) {
      ++g.dropped_self_loops_;
      continue;
    }
    if (tx.amount > 0.0 && (min_positive == 0.0 || tx.amount < min_positive)) min_positive = tx.amount;
    g.accounts_.push_back(tx.src);
    g.accounts_.push_back(tx.dst);
  }
  if (g.accounts_.empty()) throw DataError("no transactions left after dropping self-loops");

  g.origin_ = min_ts;
  g.snapshot_count_ = static_cast<std::uint32_t>((max_ts - min_ts) / options.epsilon_seconds + 1);

  std::sort(g.accounts_.begin(), g.accounts_.end());
  g.accounts_.erase(std::unique(g.accounts_.begin(), g.accounts_.end()), g.accounts_.end());

  // Zero-amount transfers sit strictly below every positive amount so that
  // edge weights stay positive and amount ranks are preserved.
  const double zero_weight = min_positive > 0.0 ? 0.5 * min_positive : 1.0;

  struct Resolved {
    TasmgNode src, dst;
    double weight;
  };
  std::vector<Resolved> resolved;
  resolved.reserve(txs.size());
  for (const auto& tx : txs) {
    if (tx.is_self_loop()) continue;
    const auto snap = static_cast<std::uint32_t>((tx.timestamp - min_ts) / options.epsilon_seconds);
    const auto src = *g.find_account(tx.src);
    const auto dst = *g.find_account(tx.dst);
    resolved.push_back({{src, snap}, {dst, snap}, tx.amount > 0.0 ? tx.amount : zero_weight});
    g.nodes_.push_back({src, snap});
    g.nodes_.push_back({dst, snap});
  }
  std::sort(g.nodes_.begin(), g.nodes_.end());
  g.nodes_.erase(std::unique(g.nodes_.begin(), g.nodes_.end()), g.nodes_.end());

  g.edges_.reserve(resolved.size() * (options.undirected ? 2 : 1) + g.nodes_.size());
  for (const auto& r : resolved) {
    g.edges_.push_back({*g.find_node(r.src), *g.find_node(r.dst), r.weight, 0, EdgeKind::transaction});
  }
  if (options.undirected) {
    for (std::size_t i = 0, n = g.edges_.size(); i < n; ++i) {
      auto reversed = g.edges_[i];
      std::swap(reversed.src, reversed.dst);
      g.edges_.push_back(reversed);
    }
  }
  // Nodes are sorted by (account, snapshot): successive copies of an account are adjacent.
  for (NodeId v = 0; v + 1 < g.nodes_.size(); ++v) {
    const auto& a = g.nodes_[v];
    const auto& b = g.nodes_[v + 1];
    if (a.account == b.account && b.snapshot == a.snapshot + 1) {
      g.edges_.push_back({v, v + 1, options.self_conn_weight, 1, EdgeKind::self_connection});
    }
  }

  g.build_index();
  return g;
}

std::vector<TasmgEdge> accessible_edges(const Tasmg& g, const TasmgNode& v) {
  const auto id = g.find_node(v);
  if (!id) {
    throw DataError("unknown node: account " + std::to_string(v.account) + " in snapshot " +
                    std::to_string(v.snapshot));
  }
  std::vector<TasmgEdge> out;
  for (const auto e : g.accessible(*id)) out.push_back(g.edge(e));
  return out;
}

nlohmann::json to_json(const Tasmg& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes()) nodes.push_back({n.account, n.snapshot});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({e.src, e.dst, e.weight, e.accessibility, static_cast<int>(e.kind)});
  }
  return {{"format", kDumpFormat},
          {"epsilon_seconds", g.epsilon_seconds()},
          {"self_conn_weight", g.options().self_conn_weight},
          {"undirected", g.options().undirected},
          {"origin", g.origin_timestamp()},
          {"snapshot_count", g.snapshot_count()},
          {"dropped_self_loops", g.dropped_self_loops()},
          {"accounts", g.accounts()},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

Tasmg tasmg_from_json(const nlohmann::json& j) {
  Tasmg g;
  try {
    if (j.at("format").get<std::string>() != kDumpFormat) throw DataError("unsupported graph dump format");
    g.options_.epsilon_seconds = j.at("epsilon_seconds").get<std::int64_t>();
    g.options_.self_conn_weight = j.at("self_conn_weight").get<double>();
    g.options_.undirected = j.at("undirected").get<bool>();
    check_options(g.options_);
    g.origin_ = j.at("origin").get<std::int64_t>();
    g.snapshot_count_ = j.at("snapshot_count").get<std::uint32_t>();
    g.dropped_self_loops_ = j.at("dropped_self_loops").get<std::size_t>();
    g.accounts_ = j.at("accounts").get<std::vector<std::string>>();
    for (const auto& n : j.at("nodes")) g.nodes_.push_back({n.at(0).get<AccountId>(), n.at(1).get<std::uint32_t>()});
    for (const auto& e : j.at("edges")) {
      const int kind = e.at(4).get<int>();
      if (kind != 0 && kind != 1) throw DataError("bad edge kind");
      g.edges_.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>(), e.at(2).get<double>(),
                          e.at(3).get<std::int8_t>(), static_cast<EdgeKind>(kind)});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed graph dump: ") + ex.what());
  }

  if (!std::is_sorted(g.accounts_.begin(), g.accounts_.end()) ||
      std::adjacent_find(g.accounts_.begin(), g.accounts_.end()) != g.accounts_.end()) {
    throw DataError("graph dump: accounts must be sorted and unique");
  }
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    const auto& n = g.nodes_[i];
    if (n.account >= g.accounts_.size() || n.snapshot >= g.snapshot_count_ ||
        (i > 0 && !(g.nodes_[i - 1] < n))) {
      throw DataError("graph dump: invalid node list at index " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < g.edges_.size(); ++i) {
    const auto& e = g.edges_[i];
    bool ok = e.src < g.nodes_.size() && e.dst < g.nodes_.size() && e.weight > 0.0;
    if (ok) {
      const auto& s = g.nodes_[e.src];
      const auto& d = g.nodes_[e.dst];
      if (e.kind == EdgeKind::transaction) {
        ok = s.snapshot == d.snapshot && s.account != d.account && e.accessibility == 0;
      } else {
        ok = s.account == d.account && d.snapshot == s.snapshot + 1 && e.accessibility == 1;
      }
    }
    if (!ok) throw DataError("graph dump: invalid edge at index " + std::to_string(i));
  }
  g.build_index();
  return g;
}

}  // namespace taw
