#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taw/embed.hpp"
#include "taw/ingest.hpp"
#include "taw/matrix.hpp"
#include "taw/tasmg.hpp"
#include "taw/walker.hpp"

namespace taw {

/// Unordered account pair stored with a < b.
struct AccountPair {
  std::string a;
  std::string b;

  static AccountPair of(std::string_view x, std::string_view y);
  auto operator<=>(const AccountPair&) const = default;
};

struct SplitSpec {
  double hide_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<Transaction> train_txs;  // self-loops and every transaction of a hidden pair removed
  std::vector<AccountPair> train_pos;  // distinct linked pairs left in train_txs, sorted
  std::vector<AccountPair> test_pos;   // hidden pairs
  std::vector<AccountPair> test_neg;
  std::vector<AccountPair> train_neg;

  /// FNV-1a over the canonical listing of all pair sets.
  std::uint64_t fingerprint() const;
};

/// Number of hidden pairs: round(hide_fraction * pairs), at least 1.
std::size_t hidden_pair_count(std::size_t pairs, double hide_fraction);

/// Hides a uniform sample of distinct linked pairs and samples unlinked pairs
/// (disjoint between train and test) as negatives. Deterministic in `seed`.
SplitSpec make_split(std::span<const Transaction> txs, double hide_fraction, std::uint64_t seed);

/// Throws Error if a test-positive pair has a transaction in train_txs or
/// the negative counts are off.
void check_split(const SplitSpec& split);

std::vector<double> hadamard_feature(std::span<const double> u, std::span<const double> v);

struct ClassifierOptions {
  double l2 = 1e-4;
  double tolerance = 1e-6;  // on the gradient norm
  std::size_t max_iterations = 1000;
};

/// Binary logistic regression on standardized features.
struct LogisticModel {
  std::vector<double> weights;  // in standardized feature space
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> loss_history;  // objective after each iteration, first entry at the start
  double gradient_norm = 0.0;

  double decision(std::span<const double> x) const;
  double predict(std::span<const double> x) const;  // in (0, 1)
};

/// Full-batch gradient descent with backtracking on the mean log-loss plus
/// (l2 / 2) * ||w||^2. Labels are 0/1; both classes must be present.
LogisticModel train_classifier(const Matrix& features, std::span<const int> labels, const ClassifierOptions& options = {});

enum class SimilarityIndex { cn, aa, ra, jaccard };
std::string_view to_string(SimilarityIndex index);

/// Undirected simple projection of a transaction list.
class NeighborhoodGraph {
 public:
  explicit NeighborhoodGraph(std::span<const Transaction> txs);

  /// Accounts absent from the graph score 0.
  double score(std::string_view u, std::string_view v, SimilarityIndex index) const;

 private:
  std::vector<std::string> accounts_;                // sorted
  std::vector<std::vector<std::uint32_t>> adjacency_;  // sorted
  std::optional<std::uint32_t> find(std::string_view id) const;
};

std::vector<double> similarity_scores(std::span<const Transaction> train_txs, std::span<const AccountPair> pairs,
                                      SimilarityIndex index);

/// (n' + 0.5 n'') / n over all |pos| * |neg| comparisons.
double auc_exhaustive(std::span<const double> pos, std::span<const double> neg);
/// Same statistic over `comparisons` uniformly drawn (pos, neg) pairs.
double auc_sampled(std::span<const double> pos, std::span<const double> neg, std::size_t comparisons, std::uint64_t seed);

struct RankedPair {
  AccountPair pair;
  double score = 0.0;
  bool positive = false;
};

/// Fraction of true links among the L highest scores. Equal scores are
/// ordered by pair. Throws Error if L is 0 or exceeds the candidate count.
double precision_at_L(std::span<const RankedPair> candidates, std::size_t L);

/// Step-interpolated area under the precision-recall curve; tied scores form
/// a single threshold.
double average_precision(std::span<const double> scores, std::span<const int> labels);

enum class Method { taw, deepwalk, node2vec, cn, aa, ra, jaccard, random };
std::string_view to_string(Method m);
Method parse_method(std::string_view text);
bool is_embedding_method(Method m);

struct EvalConfig {
  Method method = Method::taw;
  BuildOptions graph;
  WalkConfig walk;
  SgnsConfig sgns;
  ClassifierOptions classifier;
  double hide_fraction = 0.2;
  std::uint32_t seeds = 5;
  std::uint64_t base_seed = 42;  // seed i uses base_seed + i for split, walks and training
  std::size_t top_L = 100;       // clamped to the candidate count
  std::size_t auc_comparisons = 0;  // 0 = exhaustive
  unsigned threads = 1;             // seeds evaluated concurrently

  void validate() const;
  nlohmann::json to_json() const;
};

struct Metrics {
  double auc = 0.0;
  double ap = 0.0;
  double precision_at_L = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  Metrics metrics;
  std::size_t L = 0;
  std::uint64_t split_fingerprint = 0;
  std::size_t test_pairs = 0;
};

struct EvalReport {
  std::string method;
  nlohmann::json config;
  std::vector<SeedResult> per_seed;
  Metrics mean;
  Metrics std;  // population standard deviation over seeds

  nlohmann::json to_json() const;
};

/// Intermediate products of one seed, for persisting artifacts.
struct SeedArtifacts {
  std::optional<Tasmg> graph;
  std::optional<WalkCorpus> corpus;
  std::optional<EmbeddingSet> embeddings;
};

SeedResult evaluate_seed(std::span<const Transaction> txs, const EvalConfig& cfg, std::uint64_t seed,
                         SeedArtifacts* artifacts = nullptr);

/// Runs every seed. When `first_seed` is given, the intermediate products of
/// seed index 0 are stored there.
EvalReport evaluate(std::span<const Transaction> txs, const EvalConfig& cfg, SeedArtifacts* first_seed = nullptr);

Metrics summarize_mean(std::span<const SeedResult> results);
Metrics summarize_std(std::span<const SeedResult> results);

}  // namespace taw
