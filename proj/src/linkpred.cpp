#include "taw/linkpred.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "taw/error.hpp"
#include "taw/rng.hpp"

namespace taw {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, std::string_view s) {
  for (const unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
}

std::uint64_t pair_key(std::uint32_t i, std::uint32_t j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

}  // namespace

AccountPair AccountPair::of(std::string_view x, std::string_view y) {
  if (y < x) std::swap(x, y);
  return {std::string(x), std::string(y)};
}

std::uint64_t SplitSpec::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  auto section = [&](std::string_view name, const std::vector<AccountPair>& pairs) {
    fnv(h, name);
    fnv(h, "\n");
    for (const auto& p : pairs) {
      fnv(h, p.a);
      fnv(h, "\t");
      fnv(h, p.b);
      fnv(h, "\n");
    }
  };
  section("train_pos", train_pos);
  section("test_pos", test_pos);
  section("test_neg", test_neg);
  section("train_neg", train_neg);
  return h;
}

std::size_t hidden_pair_count(std::size_t pairs, double hide_fraction) {
  const auto n = static_cast<std::size_t>(std::llround(hide_fraction * static_cast<double>(pairs)));
  return std::max<std::size_t>(1, n);
}

SplitSpec make_split(std::span<const Transaction> txs, double hide_fraction, std::uint64_t seed) {
  if (!(hide_fraction > 0.0 && hide_fraction < 1.0)) throw ConfigError("hide fraction must be in (0, 1)");

  std::vector<std::string_view> accounts;
  for (const auto& tx : txs) {
    if (tx.is_self_loop()) continue;
    accounts.push_back(tx.src);
    accounts.push_back(tx.dst);
  }
  std::sort(accounts.begin(), accounts.end());
  accounts.erase(std::unique(accounts.begin(), accounts.end()), accounts.end());
  auto id = [&](std::string_view a) {
    return static_cast<std::uint32_t>(std::lower_bound(accounts.begin(), accounts.end(), a) - accounts.begin());
  };

  std::vector<std::uint64_t> tx_keys(txs.size(), 0);
  std::vector<std::uint64_t> pairs;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    if (txs[i].is_self_loop()) continue;
    tx_keys[i] = pair_key(id(txs[i].src), id(txs[i].dst));
    pairs.push_back(tx_keys[i]);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  if (pairs.size() < 2) throw DataError("split needs at least two distinct linked account pairs");

  const std::size_t n_hide = hidden_pair_count(pairs.size(), hide_fraction);
  if (n_hide >= pairs.size()) throw DataError("hide fraction leaves no training pairs");

  Rng rng = Rng::stream(seed, 0x73706c6974ULL);
  std::vector<std::uint64_t> shuffled = pairs;
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  std::vector<std::uint64_t> hidden(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_hide));
  std::vector<std::uint64_t> kept(shuffled.begin() + static_cast<std::ptrdiff_t>(n_hide), shuffled.end());
  std::sort(hidden.begin(), hidden.end());
  std::sort(kept.begin(), kept.end());

  const std::uint64_t n = accounts.size();
  const std::uint64_t unlinked = n * (n - 1) / 2 - pairs.size();
  const std::size_t needed = n_hide + kept.size();
  if (needed > unlinked) {
    throw DataError("graph too small: need " + std::to_string(needed) + " unlinked pairs, only " +
                    std::to_string(unlinked) + " exist");
  }

  std::vector<std::uint64_t> negatives;
  negatives.reserve(needed);
  if (2 * needed <= unlinked) {
    std::unordered_set<std::uint64_t> taken;
    while (negatives.size() < needed) {
      const auto i = static_cast<std::uint32_t>(rng.below(n));
      const auto j = static_cast<std::uint32_t>(rng.below(n));
      if (i == j) continue;
      const auto key = pair_key(i, j);
      if (std::binary_search(pairs.begin(), pairs.end(), key) || !taken.insert(key).second) continue;
      negatives.push_back(key);
    }
  } else {
    std::vector<std::uint64_t> pool;
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t j = i + 1; j < n; ++j) {
        const auto key = pair_key(i, j);
        if (!std::binary_search(pairs.begin(), pairs.end(), key)) pool.push_back(key);
      }
    }
    for (std::size_t k = 0; k < needed; ++k) {
      std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
      negatives.push_back(pool[k]);
    }
  }

  auto to_pairs = [&](auto first, auto last) {
    std::vector<AccountPair> out;
    for (auto it = first; it != last; ++it) {
      out.push_back(AccountPair::of(accounts[*it >> 32], accounts[*it & 0xffffffffULL]));
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  SplitSpec split;
  split.hide_fraction = hide_fraction;
  split.seed = seed;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    if (!txs[i].is_self_loop() && !std::binary_search(hidden.begin(), hidden.end(), tx_keys[i])) {
      split.train_txs.push_back(txs[i]);
    }
  }
  split.train_pos = to_pairs(kept.begin(), kept.end());
  split.test_pos = to_pairs(hidden.begin(), hidden.end());
  split.test_neg = to_pairs(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_hide));
  split.train_neg = to_pairs(negatives.begin() + static_cast<std::ptrdiff_t>(n_hide), negatives.end());
  return split;
}

void check_split(const SplitSpec& split) {
  std::vector<AccountPair> train_pairs;
  for (const auto& tx : split.train_txs) train_pairs.push_back(AccountPair::of(tx.src, tx.dst));
  std::sort(train_pairs.begin(), train_pairs.end());
  for (const auto& p : split.test_pos) {
    if (std::binary_search(train_pairs.begin(), train_pairs.end(), p)) {
      throw Error("split leak: hidden pair (" + p.a + ", " + p.b + ") has training transactions");
    }
  }
  if (split.test_neg.size() != split.test_pos.size()) throw Error("split: |test_neg| != |test_pos|");
  if (split.train_neg.size() != split.train_pos.size()) throw Error("split: |train_neg| != |train_pos|");
}

std::vector<double> hadamard_feature(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error("hadamard feature: dimension mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * v[i];
  return out;
}

double LogisticModel::decision(std::span<const double> x) const {
  double s = bias;
  for (std::size_t c = 0; c < weights.size(); ++c) s += weights[c] * (x[c] - mean[c]) / scale[c];
  return s;
}

double LogisticModel::predict(std::span<const double> x) const { return sigmoid(decision(x)); }

LogisticModel train_classifier(const Matrix& features, std::span<const int> labels, const ClassifierOptions& options) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (labels.size() != n) throw Error("classifier: label count does not match feature rows");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == n) throw Error("classifier: training set must contain both classes");

  LogisticModel model;
  model.mean.assign(d, 0.0);
  model.scale.assign(d, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += features(r, c);
  }
  for (auto& m : model.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = features(r, c) - model.mean[c];
      var[c] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(n));
    model.scale[c] = sd > 1e-12 ? sd : 1.0;
  }

  Matrix z(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) z(r, c) = (features(r, c) - model.mean[c]) / model.scale[c];
  }

  std::vector<double> w(d, 0.0), grad_w(d), trial_w(d), margin(n);
  double b = 0.0, grad_b = 0.0;

  auto objective = [&](const std::vector<double>& wv, double bv, std::vector<double>* out_margin) {
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double s = bv;
      const auto row = z.row(r);
      for (std::size_t c = 0; c < d; ++c) s += wv[c] * row[c];
      if (out_margin) (*out_margin)[r] = s;
      loss += labels[r] == 1 ? softplus(-s) : softplus(s);
    }
    double reg = 0.0;
    for (const double x : wv) reg += x * x;
    return loss / static_cast<double>(n) + 0.5 * options.l2 * reg;
  };

  double current = objective(w, b, &margin);
  model.loss_history.push_back(current);
  double step = 1.0;

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_b = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double residual = sigmoid(margin[r]) - (labels[r] == 1 ? 1.0 : 0.0);
      grad_b += residual;
      const auto row = z.row(r);
      for (std::size_t c = 0; c < d; ++c) grad_w[c] += residual * row[c];
    }
    double norm2 = 0.0;
    grad_b /= static_cast<double>(n);
    norm2 += grad_b * grad_b;
    for (std::size_t c = 0; c < d; ++c) {
      grad_w[c] = grad_w[c] / static_cast<double>(n) + options.l2 * w[c];
      norm2 += grad_w[c] * grad_w[c];
    }
    model.gradient_norm = std::sqrt(norm2);
    if (model.gradient_norm < options.tolerance) break;

    // Armijo backtracking; the accepted step guarantees a decrease.
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t c = 0; c < d; ++c) trial_w[c] = w[c] - step * grad_w[c];
      const double trial_b = b - step * grad_b;
      const double value = objective(trial_w, trial_b, nullptr);
      if (value <= current - 1e-4 * step * norm2) {
        w.swap(trial_w);
        b = trial_b;
        current = objective(w, b, &margin);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    model.loss_history.push_back(current);
    step = std::min(step * 2.0, 1e6);
  }
  model.weights = std::move(w);
  model.bias = b;
  return model;
}

std::string_view to_string(SimilarityIndex index) {
  switch (index) {
    case SimilarityIndex::cn: return "cn";
    case SimilarityIndex::aa: return "aa";
    case SimilarityIndex::ra: return "ra";
    case SimilarityIndex::jaccard: return "jaccard";
  }
  return "?";
}

NeighborhoodGraph::NeighborhoodGraph(std::span<const Transaction> txs) {
  for (const auto& tx : txs) {
    if (tx.is_self_loop()) continue;
    accounts_.push_back(tx.src);
    accounts_.push_back(tx.dst);
  }
  std::sort(accounts_.begin(), accounts_.end());
  accounts_.erase(std::unique(accounts_.begin(), accounts_.end()), accounts_.end());
  adjacency_.resize(accounts_.size());
  for (const auto& tx : txs) {
    if (tx.is_self_loop()) continue;
    const auto a = *find(tx.src), b = *find(tx.dst);
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nb : adjacency_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

std::optional<std::uint32_t> NeighborhoodGraph::find(std::string_view id) const {
  const auto it = std::lower_bound(accounts_.begin(), accounts_.end(), id);
  if (it == accounts_.end() || *it != id) return std::nullopt;
  return static_cast<std::uint32_t>(it - accounts_.begin());
}

double NeighborhoodGraph::score(std::string_view u, std::string_view v, SimilarityIndex index) const {
  const auto a = find(u), b = find(v);
  if (!a || !b) return 0.0;
  const auto& na = adjacency_[*a];
  const auto& nb = adjacency_[*b];
  double sum = 0.0;
  std::size_t common = 0;
  for (auto i = na.begin(), j = nb.begin(); i != na.end() && j != nb.end();) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      const auto k = static_cast<double>(adjacency_[*i].size());
      ++common;
      if (index == SimilarityIndex::aa && k > 1.0) sum += 1.0 / std::log(k);
      if (index == SimilarityIndex::ra) sum += 1.0 / k;
      ++i;
      ++j;
    }
  }
  switch (index) {
    case SimilarityIndex::cn: return static_cast<double>(common);
    case SimilarityIndex::aa:
    case SimilarityIndex::ra: return sum;
    case SimilarityIndex::jaccard: {
      const std::size_t uni = na.size() + nb.size() - common;
      return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
    }
  }
  return 0.0;
}

std::vector<double> similarity_scores(std::span<const Transaction> train_txs, std::span<const AccountPair> pairs,
                                      SimilarityIndex index) {
  const NeighborhoodGraph g(train_txs);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(g.score(p.a, p.b, index));
  return out;
}

double auc_exhaustive(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw Error("AUC needs nonempty positive and negative score lists");
  double wins = 0.0, ties = 0.0;
  for (const double p : pos) {
    for (const double q : neg) {
      if (p > q) wins += 1.0;
      else if (p == q) ties += 1.0;
    }
  }
  const double n = static_cast<double>(pos.size()) * static_cast<double>(neg.size());
  return (wins + 0.5 * ties) / n;
}

double auc_sampled(std::span<const double> pos, std::span<const double> neg, std::size_t comparisons, std::uint64_t seed) {
  if (pos.empty() || neg.empty()) throw Error("AUC needs nonempty positive and negative score lists");
  if (comparisons == 0) throw Error("AUC needs at least one comparison");
  Rng rng(seed);
  double wins = 0.0, ties = 0.0;
  for (std::size_t k = 0; k < comparisons; ++k) {
    const double p = pos[rng.below(pos.size())];
    const double q = neg[rng.below(neg.size())];
    if (p > q) wins += 1.0;
    else if (p == q) ties += 1.0;
  }
  return (wins + 0.5 * ties) / static_cast<double>(comparisons);
}

double precision_at_L(std::span<const RankedPair> candidates, std::size_t L) {
  if (L == 0) throw Error("precision@L needs L >= 1");
  if (L > candidates.size()) {
    throw Error("precision@L: L = " + std::to_string(L) + " exceeds the " + std::to_string(candidates.size()) +
                " candidates");
  }
  std::vector<const RankedPair*> order;
  for (const auto& c : candidates) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const RankedPair* x, const RankedPair* y) {
    if (x->score != y->score) return x->score > y->score;
    return x->pair < y->pair;
  });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < L; ++i) hits += order[i]->positive;
  return static_cast<double>(hits) / static_cast<double>(L);
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("average precision: size mismatch");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) throw Error("average precision needs at least one positive label");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] == 1;
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::taw: return "taw";
    case Method::deepwalk: return "deepwalk";
    case Method::node2vec: return "node2vec";
    case Method::cn: return "cn";
    case Method::aa: return "aa";
    case Method::ra: return "ra";
    case Method::jaccard: return "jaccard";
    case Method::random: return "random";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  std::string t(text);
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto m : {Method::taw, Method::deepwalk, Method::node2vec, Method::cn, Method::aa, Method::ra,
                       Method::jaccard, Method::random}) {
    if (to_string(m) == t) return m;
  }
  throw ConfigError("unknown method '" + std::string(text) + "'");
}

bool is_embedding_method(Method m) { return m == Method::taw || m == Method::deepwalk || m == Method::node2vec; }

void EvalConfig::validate() const {
  if (graph.epsilon_seconds <= 0) throw ConfigError("epsilon must be > 0");
  if (!(graph.self_conn_weight > 0.0)) throw ConfigError("self_conn_weight must be > 0");
  walk.validate();
  sgns.validate();
  if (!(hide_fraction > 0.0 && hide_fraction < 1.0)) throw ConfigError("hide fraction must be in (0, 1)");
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  if (top_L < 1) throw ConfigError("L must be >= 1");
  if (!(classifier.l2 >= 0.0)) throw ConfigError("classifier l2 must be >= 0");
}

nlohmann::json EvalConfig::to_json() const {
  return {{"method", to_string(method)},
          {"epsilon_seconds", graph.epsilon_seconds},
          {"self_conn_weight", graph.self_conn_weight},
          {"undirected", graph.undirected},
          {"walk", walk.to_json()},
          {"sgns", sgns.to_json()},
          {"classifier", {{"l2", classifier.l2}, {"tolerance", classifier.tolerance}, {"max_iterations", classifier.max_iterations}}},
          {"hide", hide_fraction},
          {"seeds", seeds},
          {"base_seed", base_seed},
          {"L", top_L},
          {"auc_comparisons", auc_comparisons}};
}

nlohmann::json EvalReport::to_json() const {
  auto metrics = [](const Metrics& m) {
    return nlohmann::json{{"auc", m.auc}, {"ap", m.ap}, {"precision_at_L", m.precision_at_L}};
  };
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& r : per_seed) {
    auto row = metrics(r.metrics);
    row["seed"] = r.seed;
    row["L"] = r.L;
    row["test_pairs"] = r.test_pairs;
    row["split_fingerprint"] = hex(r.split_fingerprint);
    seeds.push_back(std::move(row));
  }
  return {{"method", method}, {"config", config}, {"per_seed", std::move(seeds)}, {"mean", metrics(mean)}, {"std", metrics(std)}};
}

SeedResult evaluate_seed(std::span<const Transaction> txs, const EvalConfig& cfg, std::uint64_t seed,
                         SeedArtifacts* artifacts) {
  const SplitSpec split = in_stage("split", [&] {
    auto s = make_split(txs, cfg.hide_fraction, seed);
    check_split(s);
    return s;
  });

  std::vector<double> pos_scores, neg_scores;
  switch (cfg.method) {
    case Method::cn:
    case Method::aa:
    case Method::ra:
    case Method::jaccard: {
      const auto index = cfg.method == Method::cn   ? SimilarityIndex::cn
                         : cfg.method == Method::aa ? SimilarityIndex::aa
                         : cfg.method == Method::ra ? SimilarityIndex::ra
                                                    : SimilarityIndex::jaccard;
      pos_scores = similarity_scores(split.train_txs, split.test_pos, index);
      neg_scores = similarity_scores(split.train_txs, split.test_neg, index);
      break;
    }
    case Method::random: {
      Rng rng = Rng::stream(seed, 0x72616e646f6dULL);
      for (std::size_t i = 0; i < split.test_pos.size(); ++i) pos_scores.push_back(rng.uniform());
      for (std::size_t i = 0; i < split.test_neg.size(); ++i) neg_scores.push_back(rng.uniform());
      break;
    }
    case Method::taw:
    case Method::deepwalk:
    case Method::node2vec: {
      Tasmg graph = in_stage("build-tasmg", [&] { return build_tasmg(split.train_txs, cfg.graph); });
      WalkConfig wcfg = cfg.walk;
      wcfg.mode = cfg.method == Method::taw        ? WalkMode::taw
                  : cfg.method == Method::deepwalk ? WalkMode::static_uniform
                                                   : WalkMode::static_node2vec;
      wcfg.seed = seed;
      WalkCorpus corpus = in_stage("walk", [&] { return generate_walks(graph, wcfg); });
      SgnsConfig scfg = cfg.sgns;
      scfg.seed = seed;
      EmbeddingSet emb = in_stage("embed", [&] { return train(corpus, scfg); });

      const std::vector<double> zeros(emb.dim(), 0.0);
      auto vec = [&](const std::string& account) -> std::span<const double> {
        const auto row = emb.find(account);
        return row ? emb.input.row(*row) : std::span<const double>(zeros);
      };
      auto features = [&](const std::vector<AccountPair>& pairs, Matrix& m) {
        for (const auto& p : pairs) m.append_row(hadamard_feature(vec(p.a), vec(p.b)));
      };
      Matrix train_x;
      features(split.train_pos, train_x);
      features(split.train_neg, train_x);
      std::vector<int> labels(split.train_pos.size(), 1);
      labels.resize(split.train_pos.size() + split.train_neg.size(), 0);
      const LogisticModel model = in_stage("classify", [&] { return train_classifier(train_x, labels, cfg.classifier); });

      // Decision values rank identically to probabilities without saturating into ties.
      for (const auto& p : split.test_pos) pos_scores.push_back(model.decision(hadamard_feature(vec(p.a), vec(p.b))));
      for (const auto& p : split.test_neg) neg_scores.push_back(model.decision(hadamard_feature(vec(p.a), vec(p.b))));

      if (artifacts) {
        artifacts->graph = std::move(graph);
        artifacts->corpus = std::move(corpus);
        artifacts->embeddings = std::move(emb);
      }
      break;
    }
  }

  SeedResult result;
  result.seed = seed;
  result.split_fingerprint = split.fingerprint();
  result.test_pairs = pos_scores.size() + neg_scores.size();
  result.metrics.auc = cfg.auc_comparisons == 0 ? auc_exhaustive(pos_scores, neg_scores)
                                                : auc_sampled(pos_scores, neg_scores, cfg.auc_comparisons, seed);

  std::vector<double> scores = pos_scores;
  scores.insert(scores.end(), neg_scores.begin(), neg_scores.end());
  std::vector<int> labels(pos_scores.size(), 1);
  labels.resize(scores.size(), 0);
  result.metrics.ap = average_precision(scores, labels);

  std::vector<RankedPair> ranked;
  for (std::size_t i = 0; i < split.test_pos.size(); ++i) ranked.push_back({split.test_pos[i], pos_scores[i], true});
  for (std::size_t i = 0; i < split.test_neg.size(); ++i) ranked.push_back({split.test_neg[i], neg_scores[i], false});
  result.L = std::min(cfg.top_L, ranked.size());
  result.metrics.precision_at_L = precision_at_L(ranked, result.L);
  return result;
}

Metrics summarize_mean(std::span<const SeedResult> results) {
  Metrics m;
  for (const auto& r : results) {
    m.auc += r.metrics.auc;
    m.ap += r.metrics.ap;
    m.precision_at_L += r.metrics.precision_at_L;
  }
  const auto n = static_cast<double>(std::max<std::size_t>(1, results.size()));
  m.auc /= n;
  m.ap /= n;
  m.precision_at_L /= n;
  return m;
}

Metrics summarize_std(std::span<const SeedResult> results) {
  const Metrics mean = summarize_mean(results);
  Metrics s;
  for (const auto& r : results) {
    s.auc += (r.metrics.auc - mean.auc) * (r.metrics.auc - mean.auc);
    s.ap += (r.metrics.ap - mean.ap) * (r.metrics.ap - mean.ap);
    s.precision_at_L += (r.metrics.precision_at_L - mean.precision_at_L) * (r.metrics.precision_at_L - mean.precision_at_L);
  }
  const auto n = static_cast<double>(std::max<std::size_t>(1, results.size()));
  s.auc = std::sqrt(s.auc / n);
  s.ap = std::sqrt(s.ap / n);
  s.precision_at_L = std::sqrt(s.precision_at_L / n);
  return s;
}

EvalReport evaluate(std::span<const Transaction> txs, const EvalConfig& cfg, SeedArtifacts* first_seed) {
  cfg.validate();
  EvalReport report;
  report.method = std::string(to_string(cfg.method));
  report.config = cfg.to_json();
  report.per_seed.resize(cfg.seeds);

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads, cfg.seeds));
  if (workers <= 1) {
    for (std::uint32_t i = 0; i < cfg.seeds; ++i) {
      report.per_seed[i] = evaluate_seed(txs, cfg, cfg.base_seed + i, i == 0 ? first_seed : nullptr);
    }
  } else {
    for (std::uint32_t first = 0; first < cfg.seeds; first += workers) {
      std::vector<std::future<SeedResult>> jobs;
      for (std::uint32_t i = first; i < std::min(cfg.seeds, first + workers); ++i) {
        jobs.push_back(std::async(std::launch::async, [&, i] {
          return evaluate_seed(txs, cfg, cfg.base_seed + i, i == 0 ? first_seed : nullptr);
        }));
      }
      for (std::uint32_t k = 0; k < jobs.size(); ++k) report.per_seed[first + k] = jobs[k].get();
    }
  }
  report.mean = summarize_mean(report.per_seed);
  report.std = summarize_std(report.per_seed);
  return report;
}

}  // namespace taw
