// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>

#include "em.hpp"

namespace genoclust {

// Identifiability-driven ceiling on the cluster count for a locus subset:
// floor of prod_{l in s} A_l(A_l+1)/2 over (1 + sum_{l in s}(A_l - 1)),
// at least 1, saturating instead of overflowing.
long long k_max_bound(const AlleleIndex& index, std::span<const int> s);
// Bound over the full locus set; the per-subset bound is maximal there.
long long k_max_bound(const AlleleIndex& index);

// Searches for a tripartition S1, S2, S3 of s whose genotype-state counts
// G_i = prod G_l satisfy min(k,G1) + min(k,G2) + min(k,G3) >= 2k + 2, which
// certifies generic identifiability up to label swapping. Needs |s| >= 3;
// exhaustive for |s| <= 12, greedy by descending G_l beyond. Returns the
// witness tripartition, or nullopt when no certificate was found.
std::optional<std::array<std::vector<int>, 3>> identifiability_check(
    int k, std::span<const int> s, const AlleleIndex& index);

// Memoized fits keyed by (k, s). Each model draws its restart seeds from a
// (seed, k, s)-derived stream, so a cached model is identical no matter when
// or in which walk it was first requested.
class FitCache {
 public:
  using Key = std::pair<int, std::vector<int>>;

  FitCache(const GenotypeDataset& ds, const EmConfig& base)
      : ds_(ds), base_(base) {}

  const FitResult& fit(int k, std::vector<int> s);
  const std::map<Key, FitResult>& all() const { return cache_; }
  int size() const { return static_cast<int>(cache_.size()); }

 private:
  const GenotypeDataset& ds_;
  EmConfig base_;
  std::map<Key, FitResult> cache_;
};

enum class StepKind {
  exclusion_proposal,
  exclusion_accepted,
  exclusion_rejected,
  inclusion_proposal,
  inclusion_accepted,
  inclusion_rejected,
  stop
};

enum class StopReason {
  none,
  s_complement_empty,
  inclusion_cycle,  // accepted inclusion would re-add the locus just removed
  no_change,        // a full exclusion+inclusion pass accepted neither move
  pass_limit
};

struct SelectionStep {
  StepKind kind = StepKind::stop;
  int k = 0;
  std::vector<int> s;  // current clustering loci when the step was taken
  int candidate = -1;
  double bic_current = 0.0;
  double bic_candidate = 0.0;
  StopReason stop = StopReason::none;
};

struct StepDecision {
  bool applicable = false;
  int candidate = -1;
  double bic_current = 0.0;
  double bic_candidate = 0.0;
  bool accepted = false;
};

// One exclusion move: fits every one-locus-removed neighbor, proposes the
// best (ties to the lowest locus), accepts when removal does not lower BIC.
// Not applicable when |s| == 1 (s must stay non-empty).
StepDecision exclusion_step(const GenotypeDataset& ds, int k,
                            const std::vector<int>& s, FitCache& cache);

// One inclusion move: fits every one-locus-added neighbor, proposes the best,
// accepts only on a strict BIC improvement. Not applicable when s is full.
StepDecision inclusion_step(const GenotypeDataset& ds, int k,
                            const std::vector<int>& s, FitCache& cache);

struct StepwiseOutcome {
  std::vector<int> best_s;   // best-BIC state visited by the walk
  std::vector<int> final_s;  // state when the walk stopped
  StopReason stop = StopReason::none;
  const FitResult* best_fit = nullptr;  // owned by the cache
};

// Backward-stepwise walk for fixed k, starting from the full locus set and
// alternating exclusion then inclusion until no move is accepted, the
// complement empties, a cycle is detected, or L^2 passes elapse.
StepwiseOutcome stepwise_select_s(const GenotypeDataset& ds, int k,
                                  FitCache& cache,
                                  std::vector<SelectionStep>* trace = nullptr);

struct PerKResult {
  int k = 0;
  std::vector<int> best_s;
  std::vector<int> final_s;
  double loglik = 0.0;
  double bic = 0.0;
  StopReason stop = StopReason::none;
};

struct SelectionConfig {
  EmConfig em;
  int k_ceiling = 5;
  bool no_selection = false;  // keep all loci, choose k only
  bool exhaustive = false;    // test mode: argmax over all non-empty subsets
};

struct SelectionResult {
  int k_hat = 1;
  std::vector<int> s_hat;
  bool s_applicable = false;  // false when k_hat == 1 (any s fits equally)
  FitResult best;
  std::vector<PerKResult> per_k;
  std::vector<SelectionStep> trace;
  int k_max_used = 1;
  long long k_cap = 1;  // identifiability bound before the user ceiling
  bool selection_enabled = true;
  int models_fitted = 0;
};

// Full search: per-k subset walk (or fixed full set / exhaustive modes), then
// the winner across every fitted model by BIC, ties broken by smaller
// dimension, then smaller k, then lexicographically smaller s.
SelectionResult select_model(const GenotypeDataset& ds,
                             const SelectionConfig& config);

}  // namespace genoclust
