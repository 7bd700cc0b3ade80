// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "model.hpp"

namespace genoclust {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Statistic whose successive difference drives the stopping test. The
// observed-data log-likelihood is the quantity EM ascends; the expected
// complete-data variant is kept switchable for comparison runs.
enum class StopRule { observed_loglik, expected_complete_loglik };

struct EmIteration {
  int restart = 0;
  int iteration = 0;  // 0 is the initial parameter draw
  double loglik = 0.0;
  const MixtureParams& theta;
};

struct EmConfig {
  int restarts = 50;
  double epsilon = 1e-6;
  int max_iterations = 500;
  double freq_floor = 1e-10;
  std::uint64_t seed = 1;
  StopRule stop_rule = StopRule::observed_loglik;
  int threads = 0;  // 0: hardware concurrency
  // Test hook observing every iteration; setting it serializes restarts so
  // the callback order is deterministic.
  std::function<void(const EmIteration&)> on_iteration;

  void validate() const;  // throws std::invalid_argument
};

struct DegeneracyFlags {
  bool near_empty_cluster = false;
  bool clamped_frequency = false;
};

struct FitResult {
  ModelSpec spec;
  MixtureParams theta;  // canonicalized: descending pi, ties by alpha order
  double loglik = 0.0;
  double bic = 0.0;
  int restarts_run = 0;
  int iterations_of_best = 0;
  bool converged = false;
  bool near_empty_cluster = false;
  bool clamped_frequency = false;
};

// tau[i][k]: posterior probability that individual i belongs to cluster k.
using Responsibilities = std::vector<std::vector<double>>;

// Posterior cluster probabilities under theta. Loci outside spec.s do not
// enter (their factor cancels). Throws NumericError if some individual has
// zero likelihood under every cluster.
Responsibilities e_step(const GenotypeDataset& ds, const ModelSpec& spec,
                        const MixtureParams& params);

// Weighted-count parameter update. pi_k = mean responsibility; alpha rows are
// responsibility-weighted allele frequencies projected onto the simplex with
// entries floored at freq_floor; beta is fixed at the pooled observed
// frequencies. A cluster with zero responsibility mass gets the pooled
// frequencies and raises the near-empty flag.
MixtureParams m_step(const GenotypeDataset& ds, const ModelSpec& spec,
                     const Responsibilities& tau, double freq_floor = 1e-10,
                     DegeneracyFlags* flags = nullptr);

// Pooled allele frequencies (gene-copy counts over 2n) for the given loci.
std::vector<std::vector<double>> estimate_beta(const GenotypeDataset& ds,
                                               std::span<const int> loci);

// Multi-restart EM: random-responsibility initialization, alternating
// E/M steps until the stop statistic moves less than epsilon, best restart
// by final log-likelihood (ties to the lower restart index). Deterministic
// given the seed; restarts may run on multiple threads without affecting
// the result.
FitResult run_em(const GenotypeDataset& ds, const ModelSpec& spec,
                 const EmConfig& config);

// MAP rule: cluster maximizing pi_k * P(x_i | k), ties to the lowest index.
// Labels are 0-based.
std::vector<int> map_assign(const GenotypeDataset& ds, const ModelSpec& spec,
                            const MixtureParams& params);

// Sorts clusters by descending pi, ties by lexicographic alpha. Leaves the
// mixture distribution unchanged.
void canonicalize_params(MixtureParams& params);

// Exact maximizer of sum_j w_j log p_j over the simplex with p_j >= floor
// (water-filling). w is replaced by p; returns true when a bound was active.
bool clamp_to_simplex(std::vector<double>& w, double floor);

}  // namespace genoclust
