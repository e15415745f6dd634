#include "taw/walker.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "taw/alias_table.hpp"
#include "taw/error.hpp"

namespace taw {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void require_nonempty(std::span<const TasmgEdge> edges) {
  if (edges.empty()) throw Error("transition law over an empty edge set");
}

void normalize(std::vector<double>& v) {
  double total = 0.0;
  for (const double x : v) total += x;
  for (auto& x : v) x /= total;
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::string_view to_string(AmountStrategy s) {
  switch (s) {
    case AmountStrategy::aus: return "aus";
    case AmountStrategy::abs: return "abs";
    case AmountStrategy::als: return "als";
  }
  return "?";
}

std::string_view to_string(WalkMode m) {
  switch (m) {
    case WalkMode::taw: return "taw";
    case WalkMode::static_uniform: return "static_uniform";
    case WalkMode::static_node2vec: return "static_node2vec";
  }
  return "?";
}

AmountStrategy parse_amount_strategy(std::string_view text) {
  const auto t = lower(text);
  if (t == "aus") return AmountStrategy::aus;
  if (t == "abs") return AmountStrategy::abs;
  if (t == "als") return AmountStrategy::als;
  throw ConfigError("unknown amount strategy '" + std::string(text) + "' (expected aus, abs or als)");
}

WalkMode parse_walk_mode(std::string_view text) {
  const auto t = lower(text);
  if (t == "taw") return WalkMode::taw;
  if (t == "static_uniform" || t == "deepwalk") return WalkMode::static_uniform;
  if (t == "static_node2vec" || t == "node2vec") return WalkMode::static_node2vec;
  throw ConfigError("unknown walk mode '" + std::string(text) + "'");
}

void WalkConfig::validate() const {
  if (walks_per_node < 1) throw ConfigError("walks per node must be >= 1");
  if (walk_length < 1) throw ConfigError("walk length must be >= 1");
  if (!(alpha >= kMinAlpha && alpha <= kMaxAlpha)) {
    std::ostringstream msg;
    msg << "alpha = " << alpha << " violates the constraint alpha in [0.1, 0.9]";
    throw ConfigError(msg.str());
  }
  if (!(p > 0.0) || !(q > 0.0)) throw ConfigError("node2vec p and q must be > 0");
}

nlohmann::json WalkConfig::to_json() const {
  return {{"mode", to_string(mode)},     {"alpha", alpha}, {"amount_strategy", to_string(amount_strategy)},
          {"walks", walks_per_node},     {"length", walk_length}, {"p", p},
          {"q", q},                      {"seed", seed}};
}

std::vector<double> temporal_prob(std::span<const TasmgEdge> edges, double alpha) {
  require_nonempty(edges);
  std::vector<double> psi;
  psi.reserve(edges.size());
  for (const auto& e : edges) psi.push_back(e.accessibility > 0 ? alpha : 1.0 - alpha);
  normalize(psi);
  return psi;
}

std::vector<double> amount_prob(std::span<const TasmgEdge> edges, AmountStrategy strategy) {
  require_nonempty(edges);
  const std::size_t n = edges.size();
  std::vector<double> p(n, 1.0);
  switch (strategy) {
    case AmountStrategy::aus:
      break;
    case AmountStrategy::abs:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(edges[i].weight > 0.0)) throw Error("amount law needs positive edge weights");
        p[i] = edges[i].weight;
      }
      break;
    case AmountStrategy::als: {
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return edges[a].weight < edges[b].weight; });
      // Tied weights share the mean of the 1-based positions they occupy.
      for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo + 1;
        while (hi < n && edges[order[hi]].weight == edges[order[lo]].weight) ++hi;
        const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
        for (std::size_t k = lo; k < hi; ++k) p[order[k]] = rank;
        lo = hi;
      }
      break;
    }
  }
  normalize(p);
  return p;
}

std::vector<double> joint_prob(std::span<const TasmgEdge> edges, double alpha, AmountStrategy strategy) {
  auto joint = temporal_prob(edges, alpha);
  const auto amount = amount_prob(edges, strategy);
  for (std::size_t i = 0; i < joint.size(); ++i) joint[i] *= amount[i];
  normalize(joint);
  return joint;
}

TransitionTable::TransitionTable(const Tasmg& g, const WalkConfig& cfg) {
  const auto n = g.nodes().size();
  offsets_.assign(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + g.accessible(v).size();
  edges_.resize(offsets_.back());
  prob_.resize(offsets_.back());
  alias_.resize(offsets_.back());

  std::vector<TasmgEdge> local;
  for (NodeId v = 0; v < n; ++v) {
    const auto ids = g.accessible(v);
    if (ids.empty()) continue;
    local.clear();
    for (const auto e : ids) local.push_back(g.edge(e));
    const auto law = joint_prob(local, cfg.alpha, cfg.amount_strategy);
    std::copy(ids.begin(), ids.end(), edges_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]));
    build_alias(law, {prob_.data() + offsets_[v], ids.size()}, {alias_.data() + offsets_[v], ids.size()});
  }
}

EdgeId TransitionTable::sample(NodeId v, Rng& rng) const {
  return edges_[offsets_[v] + sample_alias(prob(v), alias(v), rng)];
}

std::vector<double> TransitionTable::distribution(NodeId v) const {
  if (!has(v)) return {};
  return alias_distribution(prob(v), alias(v));
}

TransitionTable build_transition_table(const Tasmg& g, const WalkConfig& cfg) {
  cfg.validate();
  return TransitionTable(g, cfg);
}

StaticGraph::StaticGraph(const Tasmg& g) : adjacency_(g.accounts().size()) {
  for (const auto& e : g.edges()) {
    if (e.kind != EdgeKind::transaction) continue;
    const auto a = g.node(e.src).account;
    const auto b = g.node(e.dst).account;
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nb : adjacency_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

bool StaticGraph::adjacent(AccountId a, AccountId b) const {
  return std::binary_search(adjacency_[a].begin(), adjacency_[a].end(), b);
}

std::vector<AccountId> taw_walk(const Tasmg& g, const TransitionTable& table, const WalkConfig& cfg,
                                AccountId account, std::uint32_t walk_index, WalkTrace* trace) {
  Rng rng = Rng::stream(cfg.seed, account, walk_index);
  const auto copies = g.account_nodes(account);
  NodeId current = copies.first + static_cast<NodeId>(rng.below(copies.size()));

  std::vector<AccountId> tokens{account};
  if (trace) {
    trace->start = current;
    trace->edges.clear();
    trace->snapshots.assign(1, g.node(current).snapshot);
  }
  for (std::uint32_t step = 0; step < cfg.walk_length && table.has(current); ++step) {
    const EdgeId e = table.sample(current, rng);
    const auto& edge = g.edge(e);
    current = edge.dst;
    if (trace) trace->edges.push_back(e);
    // A self-connection only moves the walker forward in time.
    if (edge.kind == EdgeKind::self_connection) continue;
    tokens.push_back(g.node(current).account);
    if (trace) trace->snapshots.push_back(g.node(current).snapshot);
  }
  return tokens;
}

std::vector<AccountId> static_walk(const StaticGraph& g, const WalkConfig& cfg, AccountId account,
                                   std::uint32_t walk_index) {
  Rng rng = Rng::stream(cfg.seed, account, walk_index);
  std::vector<AccountId> tokens{account};
  std::vector<double> weights;
  for (std::uint32_t step = 0; step < cfg.walk_length; ++step) {
    const AccountId cur = tokens.back();
    const auto nb = g.neighbors(cur);
    if (nb.empty()) break;
    if (cfg.mode == WalkMode::static_uniform || tokens.size() < 2) {
      tokens.push_back(nb[rng.below(nb.size())]);
      continue;
    }
    const AccountId prev = tokens[tokens.size() - 2];
    weights.resize(nb.size());
    double total = 0.0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] == prev) weights[i] = 1.0 / cfg.p;
      else if (g.adjacent(prev, nb[i])) weights[i] = 1.0;
      else weights[i] = 1.0 / cfg.q;
      total += weights[i];
    }
    double target = rng.uniform() * total;
    std::size_t pick = nb.size() - 1;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (target < weights[i]) {
        pick = i;
        break;
      }
      target -= weights[i];
    }
    tokens.push_back(nb[pick]);
  }
  return tokens;
}

std::size_t WalkCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& w : walks) n += w.size();
  return n;
}

WalkCorpus generate_walks(const Tasmg& g, const WalkConfig& cfg) {
  cfg.validate();
  const std::size_t n_accounts = g.accounts().size();
  const std::size_t w = cfg.walks_per_node;
  const bool temporal = cfg.mode == WalkMode::taw;

  TransitionTable table;
  std::optional<StaticGraph> static_graph;
  if (temporal) table = TransitionTable(g, cfg);
  else static_graph.emplace(g);

  std::vector<std::vector<std::uint32_t>> walks(n_accounts * w);
  std::vector<std::vector<std::uint32_t>> snaps(temporal ? n_accounts * w : 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    WalkTrace trace;
    for (std::size_t a = next++; a < n_accounts; a = next++) {
      for (std::uint32_t k = 0; k < w; ++k) {
        const auto slot = a * w + k;
        if (temporal) {
          walks[slot] = taw_walk(g, table, cfg, static_cast<AccountId>(a), k, &trace);
          snaps[slot] = trace.snapshots;
        } else {
          walks[slot] = static_walk(*static_graph, cfg, static_cast<AccountId>(a), k);
        }
      }
    }
  };
  const unsigned n_threads = std::min<std::size_t>(resolve_threads(cfg.threads), std::max<std::size_t>(1, n_accounts));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  WalkCorpus corpus;
  corpus.config = cfg;
  corpus.vocabulary.assign(g.accounts().begin(), g.accounts().end());
  for (std::size_t slot = 0; slot < walks.size(); ++slot) {
    if (walks[slot].size() < 2) continue;
    corpus.walks.push_back(std::move(walks[slot]));
    if (temporal) corpus.snapshots.push_back(std::move(snaps[slot]));
  }
  return corpus;
}

void write_corpus(std::ostream& out, const WalkCorpus& corpus, std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i) out << ' ';
      out << corpus.vocabulary[walk[i]];
    }
    out << '\n';
  }
}

void write_corpus_snapshots(std::ostream& out, const WalkCorpus& corpus) {
  for (const auto& s : corpus.snapshots) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out << ' ';
      out << s[i];
    }
    out << '\n';
  }
}

namespace {

template <class F>
void for_each_walk_line(std::istream& in, F&& on_fields) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fields.clear();
    std::string_view rest = line;
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(" \t");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find_first_of(" \t");
      fields.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (!fields.empty()) on_fields(line_no, fields);
  }
}

}  // namespace

WalkCorpus read_corpus(std::istream& in) {
  WalkCorpus corpus;
  std::unordered_map<std::string, std::uint32_t> ids;
  for_each_walk_line(in, [&](std::size_t, const std::vector<std::string_view>& fields) {
    std::vector<std::uint32_t> walk;
    walk.reserve(fields.size());
    for (const auto f : fields) {
      auto [it, inserted] = ids.try_emplace(std::string(f), static_cast<std::uint32_t>(corpus.vocabulary.size()));
      if (inserted) corpus.vocabulary.emplace_back(f);
      walk.push_back(it->second);
    }
    corpus.walks.push_back(std::move(walk));
  });
  return corpus;
}

void read_corpus_snapshots(std::istream& in, WalkCorpus& corpus) {
  std::vector<std::vector<std::uint32_t>> snaps;
  for_each_walk_line(in, [&](std::size_t line_no, const std::vector<std::string_view>& fields) {
    std::vector<std::uint32_t> s;
    for (const auto f : fields) {
      std::uint32_t v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw DataError("snapshot sidecar line " + std::to_string(line_no) + ": bad index '" + std::string(f) + "'");
      }
      s.push_back(v);
    }
    snaps.push_back(std::move(s));
  });
  if (snaps.size() != corpus.walks.size()) throw DataError("snapshot sidecar does not match the corpus");
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    if (snaps[i].size() != corpus.walks[i].size()) {
      throw DataError("snapshot sidecar walk " + std::to_string(i + 1) + " has the wrong length");
    }
  }
  corpus.snapshots = std::move(snaps);
}

}  // namespace taw
