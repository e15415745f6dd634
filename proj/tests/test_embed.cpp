#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "taw/embed.hpp"
#include "taw/error.hpp"

using namespace taw;

namespace {

WalkCorpus corpus_of(std::vector<std::vector<std::string>> walks) {
  WalkCorpus c;
  std::map<std::string, std::uint32_t> ids;
  for (const auto& w : walks) {
    std::vector<std::uint32_t> tokens;
    for (const auto& t : w) {
      auto [it, inserted] = ids.try_emplace(t, static_cast<std::uint32_t>(c.vocabulary.size()));
      if (inserted) c.vocabulary.push_back(t);
      tokens.push_back(it->second);
    }
    c.walks.push_back(std::move(tokens));
  }
  return c;
}

// Random walks inside two disjoint 5-cliques.
WalkCorpus two_cliques(std::uint64_t seed, bool with_snapshots = false) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> walks;
  for (int w = 0; w < 200; ++w) {
    const int clique = w % 2;
    std::vector<std::string> walk;
    int cur = static_cast<int>(rng.below(5));
    for (int s = 0; s < 20; ++s) {
      walk.push_back(std::string(1, static_cast<char>('a' + clique * 5 + cur)));
      int next = static_cast<int>(rng.below(4));
      cur = next >= cur ? next + 1 : next;
    }
    walks.push_back(walk);
  }
  auto c = corpus_of(walks);
  if (with_snapshots) {
    for (const auto& w : c.walks) {
      std::vector<std::uint32_t> s(w.size());
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint32_t>(i / 7);
      c.snapshots.push_back(s);
    }
  }
  return c;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

std::vector<double> random_vec(Rng& rng, std::size_t d, double scale) {
  std::vector<double> v(d);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

SgnsConfig small_config() {
  SgnsConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 3;
  return cfg;
}

}  // namespace

TEST_CASE("vocabulary counts and order") {
  const auto v = build_vocab(corpus_of({{"a", "b", "a"}, {"c", "a"}}));
  CHECK(v.tokens == std::vector<std::string>{"a", "b", "c"});
  CHECK(v.counts == std::vector<std::uint64_t>{3, 1, 1});
  CHECK_THROWS_AS(build_vocab(WalkCorpus{}), DataError);
}

TEST_CASE("positive pairs inside the window") {
  const std::vector<std::string> xyz{"x", "y", "z"};
  using P = std::pair<std::string, std::string>;
  CHECK(positive_pairs<std::string>(xyz, 1) == std::vector<P>{{"x", "y"}, {"y", "x"}, {"y", "z"}, {"z", "y"}});
  const std::vector<std::string> xxy{"x", "x", "y"};
  CHECK(positive_pairs<std::string>(xxy, 2) == std::vector<P>{{"x", "y"}, {"x", "y"}, {"y", "x"}, {"y", "x"}});
  const std::vector<std::string> one{"x"};
  CHECK(positive_pairs<std::string>(one, 5).empty());
}

TEST_CASE("analytic gradient matches finite differences") {
  Rng rng(123);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(16), k = 1 + rng.below(5);
    const auto x = random_vec(rng, d, 0.5), ctx = random_vec(rng, d, 0.5);
    std::vector<std::vector<double>> negs;
    for (std::size_t n = 0; n < k; ++n) negs.push_back(random_vec(rng, d, 0.5));
    std::vector<std::span<const double>> neg_spans(negs.begin(), negs.end());
    const auto g = sgns_gradient(x, ctx, neg_spans);

    auto check = [&](const std::vector<double>& analytic, auto perturb) {
      for (std::size_t c = 0; c < d; ++c) {
        const double numeric = (perturb(c, h) - perturb(c, -h)) / (2 * h);
        const double err = std::abs(analytic[c] - numeric) / std::max(1.0, std::abs(numeric));
        CHECK(err < 1e-4);
      }
    };
    check(g.center, [&](std::size_t c, double dh) {
      auto y = x;
      y[c] += dh;
      return oracle::sgns_objective(y, ctx, negs);
    });
    check(g.context, [&](std::size_t c, double dh) {
      auto y = ctx;
      y[c] += dh;
      return oracle::sgns_objective(x, y, negs);
    });
    for (std::size_t n = 0; n < k; ++n) {
      check(g.negatives[n], [&](std::size_t c, double dh) {
        auto y = negs;
        y[n][c] += dh;
        return oracle::sgns_objective(x, ctx, y);
      });
    }
  }
}

TEST_CASE("log_sigmoid is stable at the extremes") {
  CHECK(log_sigmoid(0.0) == doctest::Approx(std::log(0.5)));
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
  CHECK(log_sigmoid(800.0) == 0.0);
}

TEST_CASE("an SGD step raises the positive score and zero lr changes nothing") {
  Rng rng(5);
  EmbeddingSet s;
  s.input = Matrix(4, 8);
  s.output = Matrix(4, 8);
  for (auto& x : s.input.data()) x = 0.3 * rng.normal();
  for (auto& x : s.output.data()) x = 0.3 * rng.normal();
  const std::vector<std::uint32_t> negs{2, 3};

  const auto before_in = s.input, before_out = s.output;
  sgns_step(s, 0, 1, negs, 0.0);
  CHECK(s.input == before_in);
  CHECK(s.output == before_out);

  auto score = [&] {
    double d = 0;
    for (std::size_t c = 0; c < 8; ++c) d += s.input(0, c) * s.output(1, c);
    return d;
  };
  const double old_score = score();
  const double loss = sgns_step(s, 0, 1, negs, 0.05);
  CHECK(score() > old_score);
  std::vector<double> x(before_in.row(0).begin(), before_in.row(0).end());
  std::vector<double> ctx(before_out.row(1).begin(), before_out.row(1).end());
  std::vector<std::vector<double>> nv{{before_out.row(2).begin(), before_out.row(2).end()},
                                      {before_out.row(3).begin(), before_out.row(3).end()}};
  CHECK(loss == doctest::Approx(-oracle::sgns_objective(x, ctx, nv)));
}

TEST_CASE("a negative equal to the context is skipped") {
  EmbeddingSet a;
  a.input = Matrix(3, 4, 0.1);
  a.output = Matrix(3, 4, 0.2);
  auto b = a;
  const std::vector<std::uint32_t> with_ctx{1, 2}, without{2};
  sgns_step(a, 0, 1, with_ctx, 0.1);
  sgns_step(b, 0, 1, without, 0.1);
  CHECK(a.input == b.input);
  CHECK(a.output == b.output);
}

TEST_CASE("historical coupling") {
  EmbeddingSet s;
  s.input = Matrix(2, 3, 0.0);
  s.input(0, 0) = 1.0;
  s.output = Matrix(2, 3, 0.0);

  // a fresh per-snapshot copy equals f(v): no movement
  historical_step(s, 0, 4, 1.0, 0.1);
  CHECK(s.historical.rows() == 1);
  CHECK(s.input(0, 0) == 1.0);
  CHECK(s.historical(0, 0) == 1.0);

  s.historical(0, 0) = 3.0;
  historical_step(s, 0, 4, 0.0, 0.1);
  CHECK(s.historical(0, 0) == 3.0);

  historical_step(s, 0, 4, 1.0, 0.1);
  // rate 2 * lambda * lr = 0.2, difference 2
  CHECK(s.historical(0, 0) == doctest::Approx(2.6));
  CHECK(s.input(0, 0) == doctest::Approx(1.4));
}

TEST_CASE("sgns config validation") {
  SgnsConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lr_end = 0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.historical_lambda = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("training separates two cliques and is deterministic") {
  const auto corpus = two_cliques(1);
  auto cfg = small_config();
  cfg.epochs = 10;
  TrainLog log;
  const auto emb = train(corpus, cfg, &log);
  CHECK(emb.input.rows() == 10);
  CHECK(emb.dim() == 16);

  double intra = 0, inter = 0;
  int n_intra = 0, n_inter = 0;
  for (char a = 'a'; a <= 'j'; ++a) {
    for (char b = static_cast<char>(a + 1); b <= 'j'; ++b) {
      const double c = cosine(emb.input.row(*emb.find(std::string(1, a))), emb.input.row(*emb.find(std::string(1, b))));
      if ((a - 'a') / 5 == (b - 'a') / 5) {
        intra += c;
        ++n_intra;
      } else {
        inter += c;
        ++n_inter;
      }
    }
  }
  CHECK(intra / n_intra > inter / n_inter);

  const auto again = train(corpus, cfg);
  CHECK(again.input == emb.input);
  CHECK(again.output == emb.output);

  // loss decreases over epochs, allowing one noisy uptick
  REQUIRE(log.epoch_loss.size() == 10);
  int upticks = 0;
  for (std::size_t e = 1; e < log.epoch_loss.size(); ++e) upticks += log.epoch_loss[e] > log.epoch_loss[e - 1];
  CHECK(upticks <= 1);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
}

TEST_CASE("trained vectors are finite, bounded and nonzero") {
  const auto corpus = two_cliques(2);
  const auto cfg = small_config();
  const auto emb = train(corpus, cfg);
  for (std::size_t r = 0; r < emb.input.rows(); ++r) {
    double norm = 0;
    for (double x : emb.input.row(r)) {
      CHECK(std::isfinite(x));
      norm += x * x;
    }
    CHECK(norm > 0.0);
    CHECK(std::sqrt(norm) <= 10.0 * std::sqrt(16.0));
  }
}

TEST_CASE("embedding shape for a 2100-account corpus") {
  WalkCorpus corpus;
  Rng rng(4);
  for (int i = 0; i < 2100; ++i) corpus.vocabulary.push_back("acct" + std::to_string(i));
  for (std::uint32_t i = 0; i < 2100; ++i) {
    std::vector<std::uint32_t> w{i};
    for (int s = 0; s < 10; ++s) w.push_back(static_cast<std::uint32_t>(rng.below(2100)));
    corpus.walks.push_back(w);
  }
  SgnsConfig cfg;
  cfg.epochs = 1;
  const auto emb = train(corpus, cfg);
  CHECK(emb.input.rows() == 2100);
  CHECK(emb.input.cols() == 128);
  for (double x : emb.input.data()) CHECK(std::isfinite(x));
}

TEST_CASE("parallel training produces finite vectors of the same shape") {
  const auto corpus = two_cliques(3);
  auto cfg = small_config();
  cfg.threads = 3;
  const auto emb = train(corpus, cfg);
  CHECK(emb.input.rows() == 10);
  for (double x : emb.input.data()) CHECK(std::isfinite(x));
}

TEST_CASE("historical term needs snapshots and keeps per-snapshot vectors close") {
  auto cfg = small_config();
  cfg.historical_lambda = 0.5;
  CHECK_THROWS_AS(train(two_cliques(4), cfg), ConfigError);

  const auto corpus = two_cliques(4, true);
  const auto emb = train(corpus, cfg);
  CHECK(emb.historical_rows.size() == emb.historical.rows());
  CHECK(emb.historical.rows() > 10);
  for (double x : emb.historical.data()) CHECK(std::isfinite(x));

  auto gap = [](const EmbeddingSet& e) {
    double total = 0;
    for (const auto& [key, row] : e.historical_rows) {
      for (std::size_t c = 0; c < e.dim(); ++c) total += std::abs(e.historical(row, c) - e.input(key.first, c));
    }
    return total;
  };
  cfg.historical_lambda = 0.01;
  const auto loose = train(corpus, cfg);
  CHECK(gap(emb) < gap(loose));

  // lambda 0 ignores the snapshots entirely
  cfg.historical_lambda = 0.0;
  auto plain = corpus;
  plain.snapshots.clear();
  CHECK(train(corpus, cfg).input == train(plain, cfg).input);
}

TEST_CASE("embedding text round trip keeps six significant digits") {
  const auto emb = train(two_cliques(5), small_config());
  std::stringstream text;
  const std::vector<std::string> comments{"config_hash=00ff seed=42"};
  write_embeddings(text, emb, comments);
  const auto loaded = read_embeddings(text);
  CHECK(loaded.vocab == emb.vocab);
  REQUIRE(loaded.input.rows() == emb.input.rows());
  REQUIRE(loaded.input.cols() == emb.input.cols());
  for (std::size_t i = 0; i < emb.input.data().size(); ++i) {
    CHECK(std::abs(loaded.input.data()[i] - emb.input.data()[i]) <= 5e-6 * std::abs(emb.input.data()[i]) + 1e-300);
  }
  CHECK(loaded.find(emb.vocab[3]) == std::optional<std::uint32_t>(3));

  std::istringstream bad("2 3\na 1 2 3\n");
  CHECK_THROWS_AS(read_embeddings(bad), DataError);
}
