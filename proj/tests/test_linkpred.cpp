#include <doctest.h>

#include "oracles.hpp"
#include "taw/error.hpp"
#include "taw/linkpred.hpp"

using namespace taw;

namespace {

Transaction tx(std::string a, std::string b, std::int64_t t = 0) { return {std::move(a), std::move(b), 1.0, t}; }

// `pairs` distinct linked pairs on a ring-plus-chords graph with `n` accounts.
std::vector<Transaction> graph_with_pairs(std::size_t n, std::size_t pairs, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<Transaction> txs;
  while (seen.size() < pairs) {
    auto a = rng.below(n), b = rng.below(n);
    if (a == b) continue;
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
    txs.push_back(tx("a" + std::to_string(a), "a" + std::to_string(b), static_cast<std::int64_t>(seen.size())));
    if (rng.below(3) == 0) txs.push_back(tx("a" + std::to_string(b), "a" + std::to_string(a)));
  }
  return txs;
}

std::set<AccountPair> linked_pairs(const std::vector<Transaction>& txs) {
  std::set<AccountPair> out;
  for (const auto& t : txs) {
    if (t.src != t.dst) out.insert(AccountPair::of(t.src, t.dst));
  }
  return out;
}

}  // namespace

TEST_CASE("split sizes follow the hide fraction") {
  const auto txs = graph_with_pairs(30, 35, 1);
  const auto split = make_split(txs, 0.2, 7);
  CHECK(split.test_pos.size() == 7);
  CHECK(split.test_neg.size() == 7);
  CHECK(split.train_pos.size() == 28);
  CHECK(split.train_neg.size() == 28);
  CHECK(hidden_pair_count(4, 0.2) == 1);
  CHECK(hidden_pair_count(35, 0.2) == 7);
  CHECK(hidden_pair_count(10, 0.01) == 1);
}

TEST_CASE("splits are deterministic per seed") {
  const auto txs = graph_with_pairs(40, 80, 2);
  const auto a = make_split(txs, 0.2, 3), b = make_split(txs, 0.2, 3), c = make_split(txs, 0.2, 4);
  CHECK(a.test_pos == b.test_pos);
  CHECK(a.test_neg == b.test_neg);
  CHECK(a.train_txs == b.train_txs);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("split hygiene on random graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 8 + rng.below(40);
    const auto max_pairs = n * (n - 1) / 2;
    const auto pairs = 2 + rng.below(max_pairs / 3);
    auto txs = graph_with_pairs(n, pairs, rng.next());
    txs.push_back(tx("a0", "a0"));
    const double h = 0.1 + 0.5 * rng.uniform();
    const auto all = linked_pairs(txs);
    std::set<std::string> accounts;
    for (const auto& p : all) {
      accounts.insert(p.a);
      accounts.insert(p.b);
    }
    const auto k = accounts.size();
    if (k * (k - 1) / 2 - all.size() < all.size()) {
      CHECK_THROWS_AS(make_split(txs, h, 1), DataError);
      continue;
    }
    const auto split = make_split(txs, h, rng.next());
    CHECK_NOTHROW(check_split(split));

    const auto train = linked_pairs(split.train_txs);
    for (const auto& p : split.test_pos) {
      CHECK(all.count(p) == 1);
      CHECK(train.count(p) == 0);
    }
    std::set<AccountPair> negs;
    for (const auto* list : {&split.test_neg, &split.train_neg}) {
      for (const auto& p : *list) {
        CHECK(all.count(p) == 0);
        CHECK(p.a < p.b);
        CHECK(negs.insert(p).second);
      }
    }
    CHECK(split.test_neg.size() == split.test_pos.size());
    CHECK(split.train_pos.size() == train.size());
    CHECK(split.train_pos.size() + split.test_pos.size() == all.size());
    for (const auto& t : split.train_txs) CHECK(t.src != t.dst);
  }
}

TEST_CASE("a graph without enough unlinked pairs is rejected") {
  // complete graph on 5 accounts: no negatives exist
  std::vector<Transaction> txs;
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) txs.push_back(tx(std::to_string(a), std::to_string(b)));
  }
  CHECK_THROWS_AS(make_split(txs, 0.2, 1), DataError);
}

TEST_CASE("check_split detects a leak") {
  auto split = make_split(graph_with_pairs(20, 30, 5), 0.2, 1);
  split.train_txs.push_back(tx(split.test_pos[0].b, split.test_pos[0].a));
  CHECK_THROWS_AS(check_split(split), Error);
}

TEST_CASE("hadamard feature") {
  CHECK(hadamard_feature(std::vector<double>{1, 2}, std::vector<double>{3, -1}) == std::vector<double>{3, -2});
  CHECK(hadamard_feature(std::vector<double>{4, 5}, std::vector<double>{0, 0}) == std::vector<double>{0, 0});
  CHECK_THROWS_AS(hadamard_feature(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> u(8), v(8);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    CHECK(hadamard_feature(u, v) == hadamard_feature(v, u));
  }
}

TEST_CASE("classifier fits separable data and scores symmetrically") {
  Rng rng(3);
  Matrix x(0, 2);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.normal(), b = rng.normal();
    const int label = a + 0.5 * b > 0 ? 1 : 0;
    if (std::abs(a + 0.5 * b) < 0.2) continue;
    x.append_row(std::vector<double>{a, b});
    y.push_back(label);
  }
  const auto model = train_classifier(x, y);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double p = model.predict(x.row(i));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    correct += (p > 0.5) == (y[i] == 1);
  }
  CHECK(correct == x.rows());

  for (std::size_t i = 1; i < model.loss_history.size(); ++i) {
    CHECK(model.loss_history[i] <= model.loss_history[i - 1]);
  }

  std::vector<double> u{0.3, -1.2}, v{2.0, 0.7};
  CHECK(model.decision(hadamard_feature(u, v)) == model.decision(hadamard_feature(v, u)));
}

TEST_CASE("uninformative features give probability one half") {
  Matrix x(0, 3);
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    x.append_row(std::vector<double>{1.0, 2.0, -3.0});
    y.push_back(i % 2);
  }
  const auto model = train_classifier(x, y);
  CHECK(std::abs(model.predict(x.row(0)) - 0.5) <= 0.01);
}

TEST_CASE("classifier loss never increases on noisy data") {
  Rng rng(4);
  Matrix x(0, 5);
  std::vector<int> y;
  for (int i = 0; i < 300; ++i) {
    std::vector<double> row(5);
    for (auto& v : row) v = rng.normal() * 3.0 + 1.0;
    y.push_back(row[0] + rng.normal() > 1.0 ? 1 : 0);
    x.append_row(row);
  }
  const auto model = train_classifier(x, y);
  REQUIRE(model.loss_history.size() >= 2);
  for (std::size_t i = 1; i < model.loss_history.size(); ++i) {
    CHECK(model.loss_history[i] <= model.loss_history[i - 1]);
  }
  CHECK((model.gradient_norm <= 1e-6 || model.loss_history.size() == 1001));
}

TEST_CASE("classifier rejects a single-class training set") {
  Matrix x(2, 1, 1.0);
  const std::vector<int> y{1, 1};
  CHECK_THROWS_AS(train_classifier(x, y), Error);
}

TEST_CASE("similarity index examples") {
  const std::vector<Transaction> txs{tx("1", "2"), tx("1", "3"), tx("2", "3"), tx("3", "4")};
  const NeighborhoodGraph g(txs);
  CHECK(g.score("2", "4", SimilarityIndex::cn) == 1.0);
  CHECK(g.score("2", "4", SimilarityIndex::ra) == doctest::Approx(1.0 / 3.0));
  CHECK(g.score("2", "4", SimilarityIndex::aa) == doctest::Approx(1.0 / std::log(3.0)));
  CHECK(g.score("2", "4", SimilarityIndex::aa) == doctest::Approx(0.9102).epsilon(1e-4));

  const std::vector<Transaction> apart{tx("a", "b"), tx("c", "d")};
  const NeighborhoodGraph h(apart);
  for (auto idx : {SimilarityIndex::cn, SimilarityIndex::aa, SimilarityIndex::ra, SimilarityIndex::jaccard}) {
    CHECK(h.score("a", "c", idx) == 0.0);
    CHECK(h.score("a", "zz", idx) == 0.0);
  }
  const std::vector<Transaction> twins{tx("u", "x"), tx("u", "y"), tx("w", "x"), tx("w", "y")};
  CHECK(NeighborhoodGraph(twins).score("u", "w", SimilarityIndex::jaccard) == 1.0);
}

TEST_CASE("similarity indices match brute-force enumeration") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 2 + rng.below(49);
    std::vector<Transaction> txs;
    for (std::uint64_t i = 0, m = rng.below(4 * n); i < m; ++i) {
      txs.push_back(tx(std::to_string(rng.below(n)), std::to_string(rng.below(n))));
    }
    if (txs.empty()) continue;
    const oracle::Adjacency adj(txs);
    const NeighborhoodGraph g(txs);
    for (std::size_t u = 0; u < adj.names.size(); ++u) {
      for (std::size_t v = u + 1; v < adj.names.size(); ++v) {
        const auto &a = adj.names[u], &b = adj.names[v];
        CHECK(g.score(a, b, SimilarityIndex::cn) == adj.cn(u, v));
        CHECK(g.score(a, b, SimilarityIndex::jaccard) == adj.jaccard(u, v));
        CHECK(std::abs(g.score(a, b, SimilarityIndex::aa) - adj.aa(u, v)) <= 1e-12);
        CHECK(std::abs(g.score(a, b, SimilarityIndex::ra) - adj.ra(u, v)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("AUC examples") {
  // 10 comparisons: 7 wins, 2 ties, 1 loss
  CHECK(auc_exhaustive(std::vector<double>{1.0, 0.5}, std::vector<double>{0.1, 0.2, 0.5, 0.5, 0.9}) ==
        doctest::Approx(0.8).epsilon(1e-15));
  CHECK(auc_exhaustive(std::vector<double>{3, 3, 3}, std::vector<double>{3, 3}) == 0.5);
  CHECK(auc_exhaustive(std::vector<double>{5, 6}, std::vector<double>{1, 2, 3}) == 1.0);
  CHECK_THROWS_AS(auc_exhaustive(std::vector<double>{}, std::vector<double>{1}), Error);
  CHECK_THROWS_AS(auc_sampled(std::vector<double>{1}, std::vector<double>{}, 10, 1), Error);
}

TEST_CASE("AUC equals the Mann-Whitney statistic") {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos(1 + rng.below(60)), neg(1 + rng.below(60));
    for (auto& x : pos) x = std::floor(rng.normal() * 4.0 + 1.0) / 4.0;
    for (auto& x : neg) x = std::floor(rng.normal() * 4.0) / 4.0;
    CHECK(std::abs(auc_exhaustive(pos, neg) - oracle::mann_whitney_auc(pos, neg)) <= 1e-12);
  }
}

TEST_CASE("AUC of random scores is near one half") {
  Rng rng(44);
  std::vector<double> pos(2000), neg(2000);
  for (auto& x : pos) x = rng.uniform();
  for (auto& x : neg) x = rng.uniform();
  CHECK(std::abs(auc_sampled(pos, neg, 10000, 9) - 0.5) <= 0.02);
  CHECK(auc_sampled(pos, neg, 10000, 9) == auc_sampled(pos, neg, 10000, 9));
}

TEST_CASE("precision at L") {
  std::vector<RankedPair> c;
  for (int i = 0; i < 20; ++i) {
    c.push_back({AccountPair::of("p", std::to_string(100 + i)), 20.0 - i, i < 10 && i % 10 < 7});
  }
  CHECK(precision_at_L(c, 10) == doctest::Approx(0.7));
  CHECK(precision_at_L(c, 5) == 1.0);
  CHECK(precision_at_L(c, 20) == doctest::Approx(7.0 / 20.0));
  CHECK_THROWS_AS(precision_at_L(c, 21), Error);
  CHECK_THROWS_AS(precision_at_L(c, 0), Error);

  // a tie at the cutoff goes to the smaller pair
  const std::vector<RankedPair> tied{{AccountPair::of("b", "c"), 1.0, false}, {AccountPair::of("a", "z"), 1.0, true}};
  CHECK(precision_at_L(tied, 1) == 1.0);
}

TEST_CASE("average precision") {
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<int>{1, 0, 1, 0}) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(average_precision(std::vector<double>{4, 3, 2, 1}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(average_precision(std::vector<double>{4, 3, 2}, std::vector<int>{1, 1, 1}) == 1.0);
  CHECK(average_precision(std::vector<double>{4, 3, 2}, std::vector<int>{0, 1, 1}) < 1.0);
  CHECK_THROWS_AS(average_precision(std::vector<double>{1, 2}, std::vector<int>{0, 0}), Error);
}

TEST_CASE("rank metrics ignore positive rescaling") {
  Rng rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(30);
    std::vector<int> y(30);
    std::vector<RankedPair> ranked, scaled;
    std::vector<double> pos, neg, pos2, neg2;
    const double c = 0.5 + 10 * rng.uniform();
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = std::floor(rng.normal() * 3.0);
      y[i] = static_cast<int>(i % 3 == 0 || rng.below(4) == 0);
      ranked.push_back({AccountPair::of("x", std::to_string(i)), s[i], y[i] == 1});
      scaled.push_back({AccountPair::of("x", std::to_string(i)), s[i] * c, y[i] == 1});
      (y[i] ? pos : neg).push_back(s[i]);
      (y[i] ? pos2 : neg2).push_back(s[i] * c);
    }
    std::vector<double> s2(s);
    for (auto& x : s2) x *= c;
    CHECK(average_precision(s, y) == average_precision(s2, y));
    CHECK(auc_exhaustive(pos, neg) == auc_exhaustive(pos2, neg2));
    CHECK(precision_at_L(ranked, 10) == precision_at_L(scaled, 10));
  }
}

TEST_CASE("method names") {
  CHECK(parse_method("TAW") == Method::taw);
  CHECK(parse_method("jaccard") == Method::jaccard);
  CHECK(is_embedding_method(Method::node2vec));
  CHECK(!is_embedding_method(Method::ra));
  CHECK_THROWS_AS(parse_method("gcn"), ConfigError);
}

TEST_CASE("random scorer is at chance over five seeds") {
  SynthParams p;
  const auto txs = synth_temporal_graph(p);
  EvalConfig cfg;
  cfg.method = Method::random;
  const auto report = evaluate(txs, cfg);
  REQUIRE(report.per_seed.size() == 5);
  CHECK(std::abs(report.mean.auc - 0.5) <= 0.02);
  for (const auto& r : report.per_seed) {
    CHECK(r.metrics.auc >= 0.0);
    CHECK(r.metrics.auc <= 1.0);
    CHECK(r.L == 100);
  }
  const auto j = report.to_json();
  CHECK(j["method"] == "random");
  CHECK(j["per_seed"].size() == 5);
}

TEST_CASE("similarity baselines beat chance on community data") {
  SynthParams p;
  p.n_accounts = 200;
  p.txs_per_snapshot = 500;
  const auto txs = synth_temporal_graph(p);
  EvalConfig cfg;
  cfg.seeds = 2;
  for (auto m : {Method::cn, Method::aa, Method::ra, Method::jaccard}) {
    cfg.method = m;
    const auto report = evaluate(txs, cfg);
    CHECK(report.mean.auc > 0.6);
    CHECK(report.std.auc >= 0.0);
  }
}

TEST_CASE("embedding evaluation on a small graph") {
  SynthParams p;
  p.n_accounts = 120;
  p.n_snapshots = 3;
  p.txs_per_snapshot = 400;
  const auto txs = synth_temporal_graph(p);
  EvalConfig cfg;
  cfg.seeds = 2;
  cfg.walk.walks_per_node = 5;
  cfg.walk.walk_length = 20;
  cfg.sgns.dim = 32;
  cfg.sgns.epochs = 2;
  SeedArtifacts art;
  const auto report = evaluate(txs, cfg, &art);
  CHECK(art.graph.has_value());
  CHECK(art.corpus.has_value());
  CHECK(art.embeddings.has_value());
  CHECK(report.per_seed[0].seed == 42);
  CHECK(report.per_seed[1].seed == 43);
  CHECK(report.per_seed[0].split_fingerprint != report.per_seed[1].split_fingerprint);
  CHECK(report.mean.auc > 0.5);

  cfg.threads = 2;
  const auto parallel = evaluate(txs, cfg);
  CHECK(parallel.to_json() == report.to_json());
}

TEST_CASE("stage failures name the stage") {
  const std::vector<Transaction> tiny{tx("a", "b")};
  EvalConfig cfg;
  cfg.seeds = 1;
  try {
    evaluate(tiny, cfg);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("stage 'split'") != std::string::npos);
  }
}
