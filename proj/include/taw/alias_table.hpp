#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "taw/rng.hpp"

namespace taw {

// Vose's alias method over caller-provided storage. `weights` need not be
// normalized but must be non-negative with a positive sum. `prob` and `alias`
// must have the same length as `weights`.
void build_alias(std::span<const double> weights, std::span<double> prob, std::span<std::uint32_t> alias);

inline std::size_t sample_alias(std::span<const double> prob, std::span<const std::uint32_t> alias, Rng& rng) {
  const auto i = static_cast<std::size_t>(rng.below(prob.size()));
  return rng.uniform() < prob[i] ? i : alias[i];
}

// Exact probability of each outcome encoded by an alias table.
std::vector<double> alias_distribution(std::span<const double> prob, std::span<const std::uint32_t> alias);

/// O(1) sampler for a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  bool empty() const { return prob_.empty(); }
  std::size_t sample(Rng& rng) const { return sample_alias(prob_, alias_, rng); }
  std::vector<double> distribution() const { return alias_distribution(prob_, alias_); }

  bool operator==(const AliasTable&) const = default;

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace taw
