// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace genoclust {

// Fully specified generating model for synthetic genotype data. Clusters draw
// clustering-locus alleles from their own frequency tables; every other locus
// draws from a shared pooled table.
struct SimScenario {
  int n = 0;
  int num_loci = 0;
  std::vector<int> allele_counts;  // per locus
  int k0 = 0;
  std::vector<int> s0;  // 0-based, sorted clustering loci
  std::vector<double> pi;
  std::vector<std::vector<std::vector<double>>> alpha;  // [k][s0 idx][allele]
  std::vector<std::vector<double>> beta;                // [comp idx][allele]
  std::uint64_t seed = 1;
  int replicates = 1;

  std::vector<int> complement() const;
  void validate() const;  // throws std::invalid_argument naming the field
};

// Key-value scenario text with nested frequency tables:
//   n = 400
//   loci = 4
//   alleles = 2 2 2 2
//   populations = 2
//   proportions = 0.30 0.70
//   clustering_loci = 1 2
//   replicates = 20
//   seed = 1
//   freq <locus> <population> = f1 f2 ...   (clustering loci)
//   noise <locus> = f1 f2 ...               (remaining loci)
// '#' starts a comment; loci and populations are 1-based.
SimScenario parse_scenario(std::istream& in);
SimScenario parse_scenario(const std::string& text);
std::string serialize_scenario(const SimScenario& sc);

struct SimResult {
  GenotypeDataset data;
  std::vector<int> z;  // generating cluster per individual, 0-based
};

// Draws one dataset: cluster from pi, then two alleles per locus from the
// cluster (clustering loci) or pooled (other loci) frequencies, Hardy-Weinberg
// style. Byte-reproducible given (seed, replicate).
SimResult simulate_dataset(const SimScenario& sc, std::uint64_t seed,
                           int replicate);
SimResult simulate_dataset(const SimScenario& sc, int replicate = 0);

// Misassignment percentage minimized over cluster label matchings
// (exhaustive for up to 8 labels, greedy confusion-matrix matching beyond).
double score_recovery(std::span<const int> truth, std::span<const int> predicted);

}  // namespace genoclust
