#include "taw/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "taw/error.hpp"
#include "taw/rng.hpp"

namespace taw {

namespace {

constexpr std::string_view kHeader = "src,dst,amount,timestamp";

[[noreturn]] void row_error(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ": line " << line << ": " << what;
  throw DataError(msg.str());
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

nlohmann::json to_json(const GraphStats& stats) {
  return {{"nodes", stats.node_count},
          {"edges", stats.edge_count},
          {"avg_degree", stats.avg_degree},
          {"avg_clustering", stats.avg_clustering}};
}

std::vector<Transaction> parse_transactions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open transaction file: " + path.string());
  return parse_transactions(in, path.string());
}

std::vector<Transaction> parse_transactions(std::istream& in, std::string_view source) {
  std::vector<Transaction> txs;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);

    if (!header_seen) {
      if (view != kHeader) {
        row_error(source, line_no, "expected header '" + std::string(kHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;

    const auto fields = split_fields(view);
    if (fields.size() != 4) {
      row_error(source, line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    Transaction tx;
    tx.src = fields[0];
    tx.dst = fields[1];
    if (tx.src.empty() || tx.dst.empty()) row_error(source, line_no, "empty account identifier");

    const auto amount = fields[2];
    auto [aptr, aec] = std::from_chars(amount.data(), amount.data() + amount.size(), tx.amount);
    if (aec != std::errc() || aptr != amount.data() + amount.size() || !std::isfinite(tx.amount)) {
      row_error(source, line_no, "malformed amount '" + std::string(amount) + "'");
    }
    if (tx.amount < 0.0) row_error(source, line_no, "negative amount " + std::string(amount));

    const auto ts = fields[3];
    auto [tptr, tec] = std::from_chars(ts.data(), ts.data() + ts.size(), tx.timestamp);
    if (tec != std::errc() || tptr != ts.data() + ts.size()) {
      row_error(source, line_no, "non-integer timestamp '" + std::string(ts) + "'");
    }
    if (tx.timestamp < 0) row_error(source, line_no, "negative timestamp " + std::string(ts));

    txs.push_back(std::move(tx));
  }
  if (!header_seen) throw DataError(std::string(source) + ": missing header");
  return txs;
}

void write_transactions(std::ostream& out, std::span<const Transaction> txs) {
  out << kHeader << '\n';
  char buf[64];
  for (const auto& tx : txs) {
    // Shortest representation that parses back to the same double.
    auto res = std::to_chars(buf, buf + sizeof(buf), tx.amount);
    out << tx.src << ',' << tx.dst << ',' << std::string_view(buf, res.ptr - buf) << ','
        << tx.timestamp << '\n';
  }
}

void write_transactions(const std::filesystem::path& path, std::span<const Transaction> txs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_transactions(out, txs);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Transaction> k_order_subgraph(std::span<const Transaction> txs, std::string_view center,
                                          int k_in, int k_out) {
  if (k_in < 0 || k_out < 0) throw ConfigError("k_in and k_out must be >= 0");

  std::unordered_map<std::string_view, std::uint32_t> ids;
  for (const auto& tx : txs) {
    ids.try_emplace(tx.src, static_cast<std::uint32_t>(ids.size()));
    ids.try_emplace(tx.dst, static_cast<std::uint32_t>(ids.size()));
  }
  const auto c = ids.find(center);
  if (c == ids.end()) throw DataError("center account '" + std::string(center) + "' not found");

  std::vector<std::vector<std::uint32_t>> out_adj(ids.size()), in_adj(ids.size());
  for (const auto& tx : txs) {
    if (tx.is_self_loop()) continue;
    const auto s = ids[tx.src], d = ids[tx.dst];
    out_adj[s].push_back(d);
    in_adj[d].push_back(s);
  }

  std::vector<char> keep(ids.size(), 0);
  auto bfs = [&](const std::vector<std::vector<std::uint32_t>>& adj, int depth) {
    std::vector<int> dist(adj.size(), -1);
    std::queue<std::uint32_t> frontier;
    dist[c->second] = 0;
    frontier.push(c->second);
    while (!frontier.empty()) {
      const auto u = frontier.front();
      frontier.pop();
      keep[u] = 1;
      if (dist[u] == depth) continue;
      for (const auto v : adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          frontier.push(v);
        }
      }
    }
  };
  bfs(out_adj, k_out);
  bfs(in_adj, k_in);

  std::vector<Transaction> result;
  for (const auto& tx : txs) {
    if (!tx.is_self_loop() && keep[ids[tx.src]] && keep[ids[tx.dst]]) result.push_back(tx);
  }
  return result;
}

std::size_t synth_community(std::size_t account, std::size_t n_accounts, std::size_t n_communities) {
  return account * n_communities / n_accounts;
}

std::string synth_account_name(std::size_t account) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08zx", account);
  return buf;
}

std::vector<Transaction> synth_temporal_graph(const SynthParams& p) {
  if (p.n_accounts == 0) throw ConfigError("synth: n_accounts must be >= 1");
  if (p.n_communities < 1 || p.n_communities > p.n_accounts) {
    throw ConfigError("synth: need 1 <= n_communities <= n_accounts");
  }
  if (!(p.intra_prob >= 0.0 && p.intra_prob <= 1.0)) {
    throw ConfigError("synth: intra_prob must be in [0, 1]");
  }
  if (p.window_seconds <= 0) throw ConfigError("synth: window_seconds must be > 0");

  const std::size_t n = p.n_accounts;
  std::vector<std::string> names(n);
  // Community c owns the contiguous block [first[c], first[c + 1]).
  std::vector<std::size_t> first(p.n_communities + 1, n);
  for (std::size_t i = n; i-- > 0;) {
    names[i] = synth_account_name(i);
    first[synth_community(i, n, p.n_communities)] = i;
  }

  Rng rng(p.seed);
  std::vector<Transaction> txs;
  txs.reserve(p.n_snapshots * p.txs_per_snapshot);

  for (std::size_t s = 0; s < p.n_snapshots; ++s) {
    const std::int64_t window_start = p.start_timestamp + static_cast<std::int64_t>(s) * p.window_seconds;
    const std::size_t begin = txs.size();
    for (std::size_t k = 0; k < p.txs_per_snapshot; ++k) {
      const std::size_t src = rng.below(n);
      const std::size_t com = synth_community(src, n, p.n_communities);
      const std::size_t lo = first[com], hi = first[com + 1];
      const std::size_t inside = hi - lo - 1;  // community members other than src
      const std::size_t outside = n - (hi - lo);

      bool intra = rng.uniform() < p.intra_prob;
      if (intra && inside == 0) intra = false;
      if (!intra && outside == 0) intra = true;

      std::size_t dst = src;
      if (intra && inside > 0) {
        dst = lo + rng.below(inside);
        if (dst >= src) ++dst;
      } else if (!intra) {
        dst = rng.below(outside);
        if (dst >= lo) dst += hi - lo;
      }

      Transaction tx;
      tx.src = names[src];
      tx.dst = names[dst];
      tx.amount = std::exp(p.amount_sigma * rng.normal());
      tx.timestamp = window_start + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(p.window_seconds)));
      txs.push_back(std::move(tx));
    }
    std::stable_sort(txs.begin() + static_cast<std::ptrdiff_t>(begin), txs.end(),
                     [](const Transaction& a, const Transaction& b) { return a.timestamp < b.timestamp; });
  }
  return txs;
}

GraphStats graph_stats(std::span<const Transaction> txs) {
  std::map<std::string_view, std::uint32_t> ids;
  for (const auto& tx : txs) {
    ids.try_emplace(tx.src, 0);
    ids.try_emplace(tx.dst, 0);
  }
  std::uint32_t next = 0;
  for (auto& [_, id] : ids) id = next++;

  std::vector<std::vector<std::uint32_t>> adj(ids.size());
  for (const auto& tx : txs) {
    if (tx.is_self_loop()) continue;
    const auto a = ids[tx.src], b = ids[tx.dst];
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::size_t degree_sum = 0;
  for (auto& nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    degree_sum += nb.size();
  }

  GraphStats stats;
  stats.node_count = ids.size();
  stats.edge_count = degree_sum / 2;
  if (stats.node_count == 0) return stats;
  stats.avg_degree = static_cast<double>(degree_sum) / static_cast<double>(stats.node_count);

  double clustering_sum = 0.0;
  for (std::size_t v = 0; v < adj.size(); ++v) {
    const auto& nv = adj[v];
    const std::size_t k = nv.size();
    if (k < 2) continue;
    std::size_t links = 0;  // each neighbour-neighbour link counted twice
    for (const auto u : nv) {
      const auto& nu = adj[u];
      auto i = nv.begin();
      auto j = nu.begin();
      while (i != nv.end() && j != nu.end()) {
        if (*i < *j) ++i;
        else if (*j < *i) ++j;
        else { ++links; ++i; ++j; }
      }
    }
    clustering_sum += static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  stats.avg_clustering = clustering_sum / static_cast<double>(stats.node_count);
  return stats;
}

}  // namespace taw
