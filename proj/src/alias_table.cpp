#include "taw/alias_table.hpp"

#include <cmath>

#include "taw/error.hpp"

namespace taw {

void build_alias(std::span<const double> weights, std::span<double> prob, std::span<std::uint32_t> alias) {
  const std::size_t n = weights.size();
  if (n == 0) throw Error("alias table needs at least one outcome");
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("alias table weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error("alias table weights sum to zero");

  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    prob[i] = weights[i] * static_cast<double>(n) / total;
    alias[i] = static_cast<std::uint32_t>(i);
    (prob[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    alias[s] = l;
    prob[l] = (prob[l] + prob[s]) - 1.0;
    if (prob[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (const auto i : large) prob[i] = 1.0;
  for (const auto i : small) prob[i] = 1.0;
}

std::vector<double> alias_distribution(std::span<const double> prob, std::span<const std::uint32_t> alias) {
  const std::size_t n = prob.size();
  std::vector<double> p(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] += prob[i] / static_cast<double>(n);
    p[alias[i]] += (1.0 - prob[i]) / static_cast<double>(n);
  }
  return p;
}

AliasTable::AliasTable(std::span<const double> weights) : prob_(weights.size()), alias_(weights.size()) {
  build_alias(weights, prob_, alias_);
}

}  // namespace taw
