// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace genoclust {

// Unordered diploid genotype at one locus, stored canonically with a <= b.
// Alleles are dense 0-based labels into the locus's allele list.
struct Genotype {
  std::int32_t a = 0;
  std::int32_t b = 0;
  friend auto operator<=>(const Genotype&, const Genotype&) = default;
  bool homozygous() const { return a == b; }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int field, const std::string& what)
      : std::runtime_error(format(line, field, what)), line_(line), field_(field) {}
  int line() const { return line_; }
  int field() const { return field_; }

 private:
  static std::string format(int line, int field, const std::string& what);
  int line_ = 0;
  int field_ = 0;
};

// Per-locus allele label space: the dense label j (0-based) of a raw file code
// is its rank in the sorted list of distinct codes observed at that locus.
struct AlleleIndex {
  std::vector<std::vector<long long>> codes;  // per locus, ascending raw codes

  int num_loci() const { return static_cast<int>(codes.size()); }
  int allele_count(int locus) const {
    return static_cast<int>(codes[locus].size());
  }
  // Number of distinct unordered genotypes at a locus: A(A+1)/2.
  long long distinct_genotypes(int locus) const {
    const long long a = allele_count(locus);
    return a * (a + 1) / 2;
  }
  // Dense label for a raw code, or -1 if the code was never observed.
  int dense_label(int locus, long long raw) const;
};

class GenotypeDataset {
 public:
  GenotypeDataset() = default;
  GenotypeDataset(std::vector<std::string> locus_names,
                  std::vector<std::string> ids, AlleleIndex index,
                  std::vector<std::vector<Genotype>> rows);

  int n() const { return static_cast<int>(rows_.size()); }
  int num_loci() const { return index_.num_loci(); }
  const AlleleIndex& index() const { return index_; }
  const std::vector<std::string>& locus_names() const { return locus_names_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::vector<Genotype>>& rows() const { return rows_; }

  // Distinct multilocus genotypes in lexicographic order with multiplicities;
  // counts sum to n.
  const std::vector<std::vector<Genotype>>& patterns() const {
    return patterns_;
  }
  const std::vector<int>& pattern_counts() const { return pattern_counts_; }
  const std::vector<int>& row_pattern() const { return row_pattern_; }

  // Gene-copy counts per dense allele label; each locus sums to 2n.
  const std::vector<std::vector<long long>>& allele_copies() const {
    return allele_copies_;
  }

  bool operator==(const GenotypeDataset& other) const;

 private:
  void finalize();

  std::vector<std::string> locus_names_;
  std::vector<std::string> ids_;
  AlleleIndex index_;
  std::vector<std::vector<Genotype>> rows_;
  std::vector<std::vector<Genotype>> patterns_;
  std::vector<int> pattern_counts_;
  std::vector<int> row_pattern_;
  std::vector<std::vector<long long>> allele_copies_;
};

// Builds a dataset from raw allele codes: per locus, distinct codes are
// ranked ascending into dense labels and pairs are stored canonically.
GenotypeDataset build_dataset(
    std::vector<std::string> locus_names, std::vector<std::string> ids,
    const std::vector<std::vector<std::pair<long long, long long>>>& raw_rows);

// Reads the whitespace-separated genotype format: a header line with L locus
// names, then one line per individual holding an identifier followed by 2L
// integer allele codes (two consecutive codes per locus, header order).
// The missing-data sentinel -9 is rejected.
GenotypeDataset parse_genotypes(std::istream& in);
GenotypeDataset parse_genotypes(const std::string& text);

// Inverse of parse_genotypes; emits original raw allele codes.
std::string serialize_genotypes(const GenotypeDataset& ds);

// (pattern, count) view over the dataset's distinct multilocus genotypes.
std::vector<std::pair<std::vector<Genotype>, int>> genotype_counts(
    const GenotypeDataset& ds);

}  // namespace genoclust
