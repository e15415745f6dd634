#include "taw/embed.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "taw/alias_table.hpp"
#include "taw/error.hpp"
#include "taw/rng.hpp"

namespace taw {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Plain access for the deterministic path; relaxed atomics when several
// threads update the same matrices.
template <bool Shared>
struct Cell {
  static double load(const double& x) {
    if constexpr (Shared) return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
    else return x;
  }
  static void add(double& x, double d) {
    if constexpr (Shared) {
      std::atomic_ref<double> r(x);
      r.store(r.load(std::memory_order_relaxed) + d, std::memory_order_relaxed);
    } else {
      x += d;
    }
  }
};

template <bool Shared>
double sgns_kernel(std::span<double> center, Matrix& output, std::uint32_t context,
                   std::span<const std::uint32_t> negatives, double lr, std::vector<double>& grad) {
  using C = Cell<Shared>;
  const std::size_t d = center.size();
  grad.assign(d, 0.0);
  double loss = 0.0;

  auto visit = [&](std::uint32_t row, bool positive) {
    auto out = output.row(row);
    double dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) dot += C::load(center[c]) * C::load(out[c]);
    loss -= positive ? log_sigmoid(dot) : log_sigmoid(-dot);
    const double g = (positive ? 1.0 : 0.0) - sigmoid(dot);
    for (std::size_t c = 0; c < d; ++c) {
      grad[c] += g * C::load(out[c]);
      C::add(out[c], lr * g * C::load(center[c]));
    }
  };
  visit(context, true);
  for (const auto n : negatives) {
    if (n != context) visit(n, false);
  }
  for (std::size_t c = 0; c < d; ++c) C::add(center[c], lr * grad[c]);
  return loss;
}

template <bool Shared>
void historical_kernel(std::span<double> snapshot_vec, std::span<double> global_vec, double lambda, double lr) {
  using C = Cell<Shared>;
  const double rate = 2.0 * lambda * lr;
  for (std::size_t c = 0; c < snapshot_vec.size(); ++c) {
    const double diff = C::load(snapshot_vec[c]) - C::load(global_vec[c]);
    C::add(snapshot_vec[c], -rate * diff);
    C::add(global_vec[c], rate * diff);
  }
}

}  // namespace

void SgnsConfig::validate() const {
  if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
  if (window < 1) throw ConfigError("context window must be >= 1");
  if (negatives < 1) throw ConfigError("negatives per pair must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) throw ConfigError("learning rates must satisfy lr_start >= lr_end > 0");
  if (!std::isfinite(noise_exponent)) throw ConfigError("noise exponent must be finite");
  if (!(historical_lambda >= 0.0)) throw ConfigError("historical lambda must be >= 0");
}

nlohmann::json SgnsConfig::to_json() const {
  return {{"dim", dim},
          {"window", window},
          {"negatives", negatives},
          {"epochs", epochs},
          {"lr_start", lr_start},
          {"lr_end", lr_end},
          {"noise_exponent", noise_exponent},
          {"lambda", historical_lambda},
          {"seed", seed}};
}

Vocab build_vocab(const WalkCorpus& corpus) {
  std::vector<std::uint64_t> counts(corpus.vocabulary.size(), 0);
  std::uint64_t total = 0;
  for (const auto& walk : corpus.walks) {
    for (const auto t : walk) ++counts[t];
    total += walk.size();
  }
  if (total == 0) throw DataError("cannot build a vocabulary from an empty corpus");

  std::vector<std::uint32_t> present;
  for (std::uint32_t t = 0; t < counts.size(); ++t) {
    if (counts[t] > 0) present.push_back(t);
  }
  std::sort(present.begin(), present.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return corpus.vocabulary[a] < corpus.vocabulary[b];
  });
  Vocab vocab;
  for (const auto t : present) {
    vocab.tokens.push_back(corpus.vocabulary[t]);
    vocab.counts.push_back(counts[t]);
  }
  return vocab;
}

std::optional<std::uint32_t> EmbeddingSet::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingSet::reindex() {
  index_.clear();
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    if (!index_.emplace(vocab[i], i).second) throw DataError("duplicate token in embedding set: " + vocab[i]);
  }
}

std::uint32_t EmbeddingSet::historical_row(std::uint32_t account, std::uint32_t snapshot) {
  const auto [it, inserted] = historical_rows.try_emplace({account, snapshot}, static_cast<std::uint32_t>(historical.rows()));
  if (inserted) {
    const auto src = input.row(account);
    historical.append_row(std::vector<double>(src.begin(), src.end()));
  }
  return it->second;
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> context,
                           std::span<const std::span<const double>> negatives) {
  const std::size_t d = center.size();
  auto dot = [d](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += a[c] * b[c];
    return s;
  };
  SgnsGradient g;
  g.center.assign(d, 0.0);
  const double gp = 1.0 - sigmoid(dot(center, context));
  g.context.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    g.center[c] += gp * context[c];
    g.context[c] = gp * center[c];
  }
  for (const auto neg : negatives) {
    const double gn = -sigmoid(dot(center, neg));
    std::vector<double> gneg(d);
    for (std::size_t c = 0; c < d; ++c) {
      g.center[c] += gn * neg[c];
      gneg[c] = gn * center[c];
    }
    g.negatives.push_back(std::move(gneg));
  }
  return g;
}

double sgns_step_vector(std::span<double> input, Matrix& output, std::uint32_t context,
                        std::span<const std::uint32_t> negatives, double lr) {
  std::vector<double> grad;
  return sgns_kernel<false>(input, output, context, negatives, lr, grad);
}

double sgns_step(EmbeddingSet& state, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives, double lr) {
  return sgns_step_vector(state.input.row(center), state.output, context, negatives, lr);
}

void historical_step(EmbeddingSet& state, std::uint32_t account, std::uint32_t snapshot, double lambda, double lr) {
  if (lambda == 0.0) return;
  const auto row = state.historical_row(account, snapshot);
  historical_kernel<false>(state.historical.row(row), state.input.row(account), lambda, lr);
}

namespace {

struct TrainState {
  const SgnsConfig& cfg;
  EmbeddingSet& emb;
  const std::vector<std::vector<std::uint32_t>>& walks;  // vocab ids
  const std::vector<std::vector<std::uint32_t>>* snapshots;
  const AliasTable& noise;
  double total_pairs;
};

// Number of (i, j) updates one pass over `walk` performs.
std::size_t count_pairs(std::span<const std::uint32_t> walk, std::size_t window) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(walk.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) n += (j != i && walk[j] != walk[i]);
  }
  return n;
}

template <bool Shared>
double train_walks(TrainState& s, std::span<const std::size_t> order, Rng& rng, std::atomic<std::size_t>& processed) {
  const auto& cfg = s.cfg;
  const bool historical = cfg.historical_lambda > 0.0;
  std::vector<std::uint32_t> negatives(cfg.negatives);
  std::vector<double> grad;
  double loss = 0.0;
  for (const auto w : order) {
    const auto& walk = s.walks[w];
    const std::size_t n = walk.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i > cfg.window ? i - cfg.window : 0;
      const std::size_t hi = std::min<std::size_t>(n, i + cfg.window + 1);
      for (std::size_t j = lo; j < hi; ++j) {
        if (j == i || walk[j] == walk[i]) continue;
        const double progress = static_cast<double>(processed.fetch_add(1, std::memory_order_relaxed)) / s.total_pairs;
        const double lr = cfg.lr_start - (cfg.lr_start - cfg.lr_end) * std::min(1.0, progress);
        for (auto& neg : negatives) neg = static_cast<std::uint32_t>(s.noise.sample(rng));
        loss += sgns_kernel<Shared>(s.emb.input.row(walk[i]), s.emb.output, walk[j], negatives, lr, grad);
        if (historical && (*s.snapshots)[w][i] == (*s.snapshots)[w][j]) {
          const auto snap = (*s.snapshots)[w][i];
          const auto row = s.emb.historical_rows.at({walk[i], snap});
          sgns_kernel<Shared>(s.emb.historical.row(row), s.emb.output, walk[j], negatives, lr, grad);
          historical_kernel<Shared>(s.emb.historical.row(row), s.emb.input.row(walk[i]), cfg.historical_lambda, lr);
        }
      }
    }
  }
  return loss;
}

}  // namespace

EmbeddingSet train(const WalkCorpus& corpus, const SgnsConfig& cfg, TrainLog* log) {
  cfg.validate();
  const Vocab vocab = build_vocab(corpus);
  const bool historical = cfg.historical_lambda > 0.0;
  if (historical && !corpus.has_snapshots()) {
    throw ConfigError("the historical term needs per-token snapshot annotations in the corpus");
  }

  std::vector<std::uint32_t> to_vocab(corpus.vocabulary.size(), 0);
  {
    std::unordered_map<std::string_view, std::uint32_t> pos;
    for (std::uint32_t i = 0; i < vocab.size(); ++i) pos.emplace(vocab.tokens[i], i);
    for (std::uint32_t t = 0; t < corpus.vocabulary.size(); ++t) {
      const auto it = pos.find(corpus.vocabulary[t]);
      if (it != pos.end()) to_vocab[t] = it->second;
    }
  }
  std::vector<std::vector<std::uint32_t>> walks;
  walks.reserve(corpus.walks.size());
  std::size_t pairs_per_epoch = 0;
  for (const auto& w : corpus.walks) {
    std::vector<std::uint32_t> ids(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) ids[i] = to_vocab[w[i]];
    pairs_per_epoch += count_pairs(ids, cfg.window);
    walks.push_back(std::move(ids));
  }

  EmbeddingSet emb;
  emb.vocab = vocab.tokens;
  emb.reindex();
  const std::size_t d = cfg.dim;
  emb.input = Matrix(vocab.size(), d);
  emb.output = Matrix(vocab.size(), d, 0.0);
  Rng rng(cfg.seed);
  for (auto& x : emb.input.data()) x = (rng.uniform() - 0.5) / static_cast<double>(d);

  if (historical) {
    for (std::size_t w = 0; w < walks.size(); ++w) {
      for (std::size_t i = 0; i < walks[w].size(); ++i) emb.historical_rows.try_emplace({walks[w][i], corpus.snapshots[w][i]}, 0);
    }
    std::uint32_t next = 0;
    emb.historical = Matrix(emb.historical_rows.size(), d);
    for (auto& [key, row] : emb.historical_rows) {
      row = next++;
      std::copy_n(emb.input.row(key.first).begin(), d, emb.historical.row(row).begin());
    }
  }

  std::vector<double> noise_weights(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    noise_weights[i] = std::pow(static_cast<double>(vocab.counts[i]), cfg.noise_exponent);
  }
  const AliasTable noise(noise_weights);

  TrainState state{cfg, emb, walks, historical ? &corpus.snapshots : nullptr, noise,
                   std::max(1.0, static_cast<double>(pairs_per_epoch) * cfg.epochs)};
  if (log) {
    log->epoch_loss.clear();
    log->pairs_per_epoch = pairs_per_epoch;
  }

  std::atomic<std::size_t> processed{0};
  std::vector<std::size_t> order(walks.size());
  const unsigned n_threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss = 0.0;
    if (n_threads <= 1) {
      loss = train_walks<false>(state, order, rng, processed);
    } else {
      std::vector<double> partial(n_threads, 0.0);
      {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (order.size() + n_threads - 1) / n_threads;
        for (unsigned t = 0; t < n_threads; ++t) {
          pool.emplace_back([&, t] {
            const std::size_t lo = std::min(order.size(), t * chunk);
            const std::size_t hi = std::min(order.size(), lo + chunk);
            Rng local = Rng::stream(cfg.seed, epoch + 1, t);
            partial[t] = train_walks<true>(state, std::span(order).subspan(lo, hi - lo), local, processed);
          });
        }
      }
      for (const double p : partial) loss += p;
    }
    if (log) log->epoch_loss.push_back(pairs_per_epoch ? loss / static_cast<double>(pairs_per_epoch) : 0.0);
  }
  return emb;
}

void write_embeddings(std::ostream& out, const EmbeddingSet& emb, std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << emb.vocab.size() << ' ' << emb.dim() << '\n';
  char buf[32];
  for (std::size_t r = 0; r < emb.vocab.size(); ++r) {
    out << emb.vocab[r];
    for (const double x : emb.input.row(r)) {
      std::snprintf(buf, sizeof(buf), " %.6g", x);
      out << buf;
    }
    out << '\n';
  }
}

EmbeddingSet read_embeddings(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw DataError("embedding file: missing 'N d' header");
  std::size_t n = 0, d = 0;
  {
    std::istringstream header(line);
    if (!(header >> n >> d) || d == 0) throw DataError("embedding file: bad header '" + line + "'");
  }
  EmbeddingSet emb;
  emb.input = Matrix(n, d);
  emb.output = Matrix(n, d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    if (!next_line()) throw DataError("embedding file: expected " + std::to_string(n) + " rows");
    std::istringstream row(line);
    std::string token;
    row >> token;
    for (std::size_t c = 0; c < d; ++c) {
      if (!(row >> emb.input(r, c)) || !std::isfinite(emb.input(r, c))) {
        throw DataError("embedding file line " + std::to_string(line_no) + ": bad value");
      }
    }
    std::string extra;
    if (row >> extra) throw DataError("embedding file line " + std::to_string(line_no) + ": too many values");
    emb.vocab.push_back(std::move(token));
  }
  emb.reindex();
  return emb;
}

}  // namespace taw
