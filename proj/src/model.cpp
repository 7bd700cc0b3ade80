// SPDX-License-Identifier: Apache-2.0
#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace genoclust {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<int> ModelSpec::complement(int num_loci) const {
  std::vector<int> out;
  out.reserve(num_loci - s.size());
  std::size_t si = 0;
  for (int l = 0; l < num_loci; ++l) {
    if (si < s.size() && s[si] == l) {
      ++si;
    } else {
      out.push_back(l);
    }
  }
  return out;
}

void ModelSpec::validate(int num_loci) const {
  if (k < 1) throw std::invalid_argument("cluster count must be >= 1");
  if (s.empty()) throw std::invalid_argument("clustering locus set is empty");
  if (!std::is_sorted(s.begin(), s.end()) ||
      std::adjacent_find(s.begin(), s.end()) != s.end()) {
    throw std::invalid_argument("clustering loci must be sorted and distinct");
  }
  if (s.front() < 0 || s.back() >= num_loci) {
    throw std::invalid_argument("clustering locus out of range");
  }
}

double hwe_genotype_prob(const Genotype& g, std::span<const double> freqs) {
  if (g.a < 0 || g.b < 0 || g.a >= static_cast<int>(freqs.size()) ||
      g.b >= static_cast<int>(freqs.size())) {
    throw std::out_of_range("allele label outside the frequency vector");
  }
  const double factor = g.homozygous() ? 1.0 : 2.0;
  return factor * freqs[g.a] * freqs[g.b];
}

double individual_loglik(std::span<const Genotype> row, const ModelSpec& spec,
                         const MixtureParams& params) {
  const int K = spec.k;

  if (K == 1) {
    // Single-component models factorize per locus; summing in global locus
    // order makes the value identical for every placement of s vs its
    // complement describing the same distribution.
    double total = 0.0;
    std::size_t si = 0, ci = 0;
    for (std::size_t l = 0; l < row.size(); ++l) {
      const bool in_s = si < spec.s.size() &&
                        spec.s[si] == static_cast<int>(l);
      const std::vector<double>& freqs =
          in_s ? params.alpha[0][si] : params.beta[ci];
      in_s ? ++si : ++ci;
      total += std::log(hwe_genotype_prob(row[l], freqs));
    }
    return total;
  }

  std::vector<double> logits(K);
  for (int k = 0; k < K; ++k) {
    double logit = std::log(params.pi[k]);
    for (std::size_t si = 0; si < spec.s.size(); ++si) {
      logit += std::log(hwe_genotype_prob(row[spec.s[si]], params.alpha[k][si]));
    }
    logits[k] = logit;
  }
  // Sorted descending accumulation: a fixed, label-independent order.
  std::sort(logits.begin(), logits.end(), std::greater<double>());
  if (logits[0] == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double logit : logits) sum += std::exp(logit - logits[0]);
  double total = logits[0] + std::log(sum);

  std::size_t ci = 0;
  std::size_t si = 0;
  for (std::size_t l = 0; l < row.size(); ++l) {
    if (si < spec.s.size() && spec.s[si] == static_cast<int>(l)) {
      ++si;
      continue;
    }
    total += std::log(hwe_genotype_prob(row[l], params.beta[ci]));
    ++ci;
  }
  return total;
}

double dataset_loglik(const GenotypeDataset& ds, const ModelSpec& spec,
                      const MixtureParams& params) {
  double total = 0.0;
  for (std::size_t u = 0; u < ds.patterns().size(); ++u) {
    total += static_cast<double>(ds.pattern_counts()[u]) *
             individual_loglik(ds.patterns()[u], spec, params);
  }
  return total;
}

long long model_dimension(const ModelSpec& spec, const AlleleIndex& index) {
  long long dim = spec.k - 1;
  std::size_t si = 0;
  for (int l = 0; l < index.num_loci(); ++l) {
    const long long free_coords = index.allele_count(l) - 1;
    if (si < spec.s.size() && spec.s[si] == l) {
      dim += static_cast<long long>(spec.k) * free_coords;
      ++si;
    } else {
      dim += free_coords;
    }
  }
  return dim;
}

double bic_from(double loglik, long long dimension, int n) {
  if (n < 2) {
    throw std::invalid_argument(
        "BIC needs at least 2 individuals; the ln(n) penalty is degenerate");
  }
  return 2.0 * loglik -
         static_cast<double>(dimension) * std::log(static_cast<double>(n));
}

double bic_score(const GenotypeDataset& ds, const ModelSpec& spec,
                 const MixtureParams& /*params_ml*/, double loglik_ml) {
  return bic_from(loglik_ml, model_dimension(spec, ds.index()), ds.n());
}

}  // namespace genoclust
