// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "dataset.hpp"

namespace genoclust {

// One candidate model: k clusters discriminated by the locus subset s.
// Loci are 0-based and s is kept sorted; s must be non-empty.
struct ModelSpec {
  int k = 1;
  std::vector<int> s;

  std::vector<int> complement(int num_loci) const;
  void validate(int num_loci) const;  // throws std::invalid_argument
  friend auto operator<=>(const ModelSpec&, const ModelSpec&) = default;
};

// Mixture parameters for a given ModelSpec:
//   pi[k]          mixing proportion of cluster k
//   alpha[k][si][j] allele frequency, si indexing spec.s
//   beta[ci][j]    pooled allele frequency, ci indexing the complement of s
struct MixtureParams {
  std::vector<double> pi;
  std::vector<std::vector<std::vector<double>>> alpha;
  std::vector<std::vector<double>> beta;
};

// Hardy-Weinberg genotype probability: (2 - [a==b]) * f[a] * f[b].
double hwe_genotype_prob(const Genotype& g, std::span<const double> freqs);

// Log-probability of one multilocus genotype under the mixture. Stabilized
// with log-sum-exp over clusters; the cluster sum is accumulated in sorted
// order so permuting cluster labels cannot change the result. Returns -inf
// when an observed allele has frequency exactly zero.
double individual_loglik(std::span<const Genotype> row, const ModelSpec& spec,
                         const MixtureParams& params);

// Dataset log-likelihood as the genotype-count weighted sum over distinct
// multilocus genotypes in lexicographic order (fixed summation policy, so
// the value is independent of row order).
double dataset_loglik(const GenotypeDataset& ds, const ModelSpec& spec,
                      const MixtureParams& params);

// Free-parameter count: (k-1) + k * sum_{l in s}(A_l - 1) + sum_{l not in s}(A_l - 1).
long long model_dimension(const ModelSpec& spec, const AlleleIndex& index);

// BIC = 2 * loglik - dim * ln(n). Requires n >= 2.
double bic_from(double loglik, long long dimension, int n);
double bic_score(const GenotypeDataset& ds, const ModelSpec& spec,
                 const MixtureParams& params_ml, double loglik_ml);

}  // namespace genoclust
