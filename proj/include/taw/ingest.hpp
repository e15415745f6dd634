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

namespace taw {

/// One directed, amount-weighted, timestamped transfer between two accounts.
struct Transaction {
  std::string src;
  std::string dst;
  double amount = 0.0;
  std::int64_t timestamp = 0;  // seconds since epoch

  bool is_self_loop() const { return src == dst; }
  bool operator==(const Transaction&) const = default;
};

/// Topology of the undirected simple projection of a transaction list.
struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double avg_degree = 0.0;      // 2|E| / |V|
  double avg_clustering = 0.0;  // mean local clustering, degree < 2 counts as 0
};

nlohmann::json to_json(const GraphStats& stats);

// CSV with header `src,dst,amount,timestamp`. LF or CRLF line endings.
// Blank lines are ignored; any other malformed row throws DataError naming
// the 1-based line number.
std::vector<Transaction> parse_transactions(const std::filesystem::path& path);
std::vector<Transaction> parse_transactions(std::istream& in, std::string_view source = "<stream>");

void write_transactions(std::ostream& out, std::span<const Transaction> txs);
void write_transactions(const std::filesystem::path& path, std::span<const Transaction> txs);

/// Transactions induced on the accounts reachable from `center` within
/// `k_out` hops along edge direction, or reaching it within `k_in` hops.
/// Self-loops are never returned. Throws DataError if `center` is absent.
std::vector<Transaction> k_order_subgraph(std::span<const Transaction> txs, std::string_view center,
                                          int k_in, int k_out);

struct SynthParams {
  std::size_t n_accounts = 500;
  std::size_t n_communities = 5;
  std::size_t n_snapshots = 6;
  std::size_t txs_per_snapshot = 1000;
  double intra_prob = 0.9;
  std::uint64_t seed = 42;
  std::int64_t window_seconds = 30 * 86400;
  std::int64_t start_timestamp = 1514764800;  // 2018-01-01T00:00:00Z
  double amount_sigma = 1.0;                  // log-normal, median 1.0
};

/// Account i belongs to community floor(i * n_communities / n_accounts).
std::size_t synth_community(std::size_t account, std::size_t n_accounts, std::size_t n_communities);
std::string synth_account_name(std::size_t account);

/// Community-structured temporal transaction network. Deterministic in
/// `params.seed`; transactions are ordered by snapshot, then timestamp.
std::vector<Transaction> synth_temporal_graph(const SynthParams& params);

GraphStats graph_stats(std::span<const Transaction> txs);

}  // namespace taw
