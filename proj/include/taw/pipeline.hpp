#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "taw/linkpred.hpp"

namespace taw {

/// Everything needed to reproduce one experiment. Defaults are the reference
/// setting: w=10, l=80, k=5, d=128, 30-day snapshots, alpha 0.5, AUS,
/// 20% hidden pairs, 5 seeds.
struct ExperimentConfig {
  std::filesystem::path input;
  double epsilon_days = 30.0;
  double self_conn_weight = 1.0;
  bool undirected = false;
  Method method = Method::taw;
  WalkConfig walk;
  SgnsConfig sgns;
  ClassifierOptions classifier;
  double hide_fraction = 0.2;
  std::uint32_t seeds = 5;
  std::uint64_t seed = 42;
  std::size_t top_L = 100;
  std::size_t auc_comparisons = 0;

  // Not part of the resolved config: they do not change any result.
  std::filesystem::path out_dir;
  unsigned threads = 1;

  void validate() const;
  EvalConfig eval_config() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;
};

std::string hash_hex(std::uint64_t h);

struct PipelineOutputs {
  EvalReport report;
  std::vector<std::filesystem::path> artifacts;
};

/// Evaluates the configured method and writes report.json plus, for
/// embedding methods, graph.json, walks.txt and embeddings.txt of the first
/// seed into cfg.out_dir. Every artifact carries the config hash and seed.
PipelineOutputs run_pipeline(const ExperimentConfig& cfg);
PipelineOutputs run_pipeline(const ExperimentConfig& cfg, std::span<const Transaction> txs);

/// Reads the embedded config back from any pipeline artifact.
ExperimentConfig config_from_artifact(const std::filesystem::path& artifact);

struct SweepRow {
  std::string label;
  double alpha = 0.0;
  AmountStrategy strategy = AmountStrategy::aus;
  Metrics mean;
  Metrics std;
  std::uint64_t split_hash = 0;  // combined split fingerprints of all seeds
  EvalReport report;
};

std::vector<SweepRow> sweep_alpha(const ExperimentConfig& cfg, std::span<const Transaction> txs,
                                  std::span<const double> alphas);
std::vector<SweepRow> sweep_strategy(const ExperimentConfig& cfg, std::span<const Transaction> txs);

nlohmann::json sweep_to_json(std::string_view kind, const ExperimentConfig& cfg, std::span<const SweepRow> rows);
/// Plot-ready series: label,alpha,strategy,mean_auc,std_auc,mean_ap,std_ap,mean_precision_at_L,std_precision_at_L
std::string sweep_to_csv(std::span<const SweepRow> rows);

}  // namespace taw
