#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taw/matrix.hpp"
#include "taw/walker.hpp"

namespace taw {

struct SgnsConfig {
  std::uint32_t dim = 128;
  std::uint32_t window = 5;
  std::uint32_t negatives = 5;
  std::uint32_t epochs = 5;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  double noise_exponent = 0.75;
  double historical_lambda = 0.0;  // 0 disables the per-snapshot consistency term
  std::uint64_t seed = 42;
  // 1 is deterministic. More threads run lock-free concurrent updates and
  // results then depend on scheduling.
  unsigned threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Distinct corpus tokens ordered by descending count, ties by token string.
struct Vocab {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;

  std::size_t size() const { return tokens.size(); }
};

Vocab build_vocab(const WalkCorpus& corpus);

/// (walk[i], walk[j]) for every i != j with |i - j| <= window, skipping
/// pairs whose two tokens are equal. Ordered by i, then j.
template <class Token>
std::vector<std::pair<Token, Token>> positive_pairs(std::span<const Token> walk, std::size_t window) {
  std::vector<std::pair<Token, Token>> pairs;
  const std::size_t n = walk.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(n, i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (j != i && walk[j] != walk[i]) pairs.emplace_back(walk[i], walk[j]);
    }
  }
  return pairs;
}

struct EmbeddingSet {
  std::vector<std::string> vocab;
  Matrix input;   // published account vectors f(v)
  Matrix output;  // context vectors
  // Per-snapshot vectors f_t(v), keyed by (vocab row, snapshot). Only filled
  // when the historical term is enabled.
  Matrix historical;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> historical_rows;

  std::size_t dim() const { return input.cols(); }
  std::optional<std::uint32_t> find(std::string_view token) const;
  /// Row for f_t(v), created as a copy of f(v) on first use.
  std::uint32_t historical_row(std::uint32_t account, std::uint32_t snapshot);
  void reindex();

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Gradient of log sigma(o_ctx . x) + sum_n log sigma(-o_n . x), where x is
/// the center input vector.
struct SgnsGradient {
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> context,
                           std::span<const std::span<const double>> negatives);

double log_sigmoid(double x);

/// One ascent step on the pair objective using f(center) as input vector.
/// Negatives equal to the context are skipped. Returns the pre-step loss
/// (negated objective).
double sgns_step(EmbeddingSet& state, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives, double lr);

/// Same update with an arbitrary input row (used for f_t(v)).
double sgns_step_vector(std::span<double> input, Matrix& output, std::uint32_t context,
                        std::span<const std::uint32_t> negatives, double lr);

/// Ascent on -lambda * ||f_t(v) - f(v)||^2: both vectors move toward each
/// other by 2 * lambda * lr * difference.
void historical_step(EmbeddingSet& state, std::uint32_t account, std::uint32_t snapshot, double lambda, double lr);

struct TrainLog {
  std::vector<double> epoch_loss;  // mean per-pair loss of the global term
  std::size_t pairs_per_epoch = 0;
};

EmbeddingSet train(const WalkCorpus& corpus, const SgnsConfig& cfg, TrainLog* log = nullptr);

// Text format: optional '#' comment lines, then `N d`, then one line per
// account `identifier v1 ... vd` with 6 significant digits.
void write_embeddings(std::ostream& out, const EmbeddingSet& emb, std::span<const std::string> comments = {});
EmbeddingSet read_embeddings(std::istream& in);

}  // namespace taw
