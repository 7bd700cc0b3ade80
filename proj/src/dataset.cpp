// SPDX-License-Identifier: Apache-2.0
#include "dataset.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

namespace genoclust {

namespace {

constexpr long long kMissingSentinel = -9;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

long long parse_code(const std::string& token, int line, int field) {
  long long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, field,
                     "'" + token + "' is not an integer allele code");
  }
  if (value == kMissingSentinel) {
    throw ParseError(line, field,
                     "missing-data sentinel -9 is not supported; provide "
                     "complete genotypes");
  }
  return value;
}

}  // namespace

std::string ParseError::format(int line, int field, const std::string& what) {
  std::string msg = "line " + std::to_string(line);
  if (field > 0) msg += ", field " + std::to_string(field);
  msg += ": " + what;
  return msg;
}

int AlleleIndex::dense_label(int locus, long long raw) const {
  const auto& list = codes[locus];
  auto it = std::lower_bound(list.begin(), list.end(), raw);
  if (it == list.end() || *it != raw) return -1;
  return static_cast<int>(it - list.begin());
}

GenotypeDataset::GenotypeDataset(std::vector<std::string> locus_names,
                                 std::vector<std::string> ids,
                                 AlleleIndex index,
                                 std::vector<std::vector<Genotype>> rows)
    : locus_names_(std::move(locus_names)),
      ids_(std::move(ids)),
      index_(std::move(index)),
      rows_(std::move(rows)) {
  finalize();
}

void GenotypeDataset::finalize() {
  const int n = static_cast<int>(rows_.size());
  const int L = index_.num_loci();

  // Distinct multilocus genotypes, lexicographic; pattern resolution by rank.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return rows_[x] < rows_[y]; });

  patterns_.clear();
  pattern_counts_.clear();
  row_pattern_.assign(n, -1);
  for (int idx : order) {
    if (patterns_.empty() || patterns_.back() != rows_[idx]) {
      patterns_.push_back(rows_[idx]);
      pattern_counts_.push_back(0);
    }
    row_pattern_[idx] = static_cast<int>(patterns_.size()) - 1;
    ++pattern_counts_.back();
  }

  allele_copies_.assign(L, {});
  for (int l = 0; l < L; ++l) {
    allele_copies_[l].assign(index_.allele_count(l), 0);
  }
  for (const auto& row : rows_) {
    for (int l = 0; l < L; ++l) {
      ++allele_copies_[l][row[l].a];
      ++allele_copies_[l][row[l].b];
    }
  }
}

bool GenotypeDataset::operator==(const GenotypeDataset& other) const {
  return locus_names_ == other.locus_names_ && ids_ == other.ids_ &&
         index_.codes == other.index_.codes && rows_ == other.rows_;
}

GenotypeDataset parse_genotypes(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(1, 0, "empty input: expected a header line of locus names");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> locus_names = split_fields(line);
  if (locus_names.empty()) {
    throw ParseError(1, 0, "header declares no loci");
  }
  const int L = static_cast<int>(locus_names.size());

  std::vector<std::string> ids;
  std::vector<std::vector<std::pair<long long, long long>>> raw_rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;  // blank lines are tolerated
    if (static_cast<int>(fields.size()) != 2 * L + 1) {
      throw ParseError(lineno, 0,
                       "expected " + std::to_string(2 * L + 1) +
                           " fields (id + 2 codes per locus), found " +
                           std::to_string(fields.size()));
    }
    ids.push_back(fields[0]);
    std::vector<std::pair<long long, long long>> row(L);
    for (int l = 0; l < L; ++l) {
      row[l].first = parse_code(fields[1 + 2 * l], lineno, 2 + 2 * l);
      row[l].second = parse_code(fields[2 + 2 * l], lineno, 3 + 2 * l);
    }
    raw_rows.push_back(std::move(row));
  }
  if (raw_rows.empty()) {
    throw ParseError(lineno, 0, "no individuals: file holds only the header");
  }

  return build_dataset(std::move(locus_names), std::move(ids), raw_rows);
}

GenotypeDataset build_dataset(
    std::vector<std::string> locus_names, std::vector<std::string> ids,
    const std::vector<std::vector<std::pair<long long, long long>>>& raw_rows) {
  const int L = static_cast<int>(locus_names.size());

  // Dense relabeling: per locus, ascending raw code order.
  AlleleIndex index;
  index.codes.assign(L, {});
  for (int l = 0; l < L; ++l) {
    std::vector<long long>& codes = index.codes[l];
    for (const auto& row : raw_rows) {
      codes.push_back(row[l].first);
      codes.push_back(row[l].second);
    }
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  }

  std::vector<std::vector<Genotype>> rows;
  rows.reserve(raw_rows.size());
  for (const auto& raw : raw_rows) {
    std::vector<Genotype> row(L);
    for (int l = 0; l < L; ++l) {
      int x = index.dense_label(l, raw[l].first);
      int y = index.dense_label(l, raw[l].second);
      row[l] = Genotype{std::min(x, y), std::max(x, y)};
    }
    rows.push_back(std::move(row));
  }

  return GenotypeDataset(std::move(locus_names), std::move(ids),
                         std::move(index), std::move(rows));
}

GenotypeDataset parse_genotypes(const std::string& text) {
  std::istringstream in(text);
  return parse_genotypes(in);
}

std::string serialize_genotypes(const GenotypeDataset& ds) {
  std::ostringstream out;
  const int L = ds.num_loci();
  for (int l = 0; l < L; ++l) {
    if (l) out << ' ';
    out << ds.locus_names()[l];
  }
  out << '\n';
  for (int i = 0; i < ds.n(); ++i) {
    out << ds.ids()[i];
    for (int l = 0; l < L; ++l) {
      const Genotype& g = ds.rows()[i][l];
      out << ' ' << ds.index().codes[l][g.a] << ' ' << ds.index().codes[l][g.b];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::vector<Genotype>, int>> genotype_counts(
    const GenotypeDataset& ds) {
  std::vector<std::pair<std::vector<Genotype>, int>> out;
  out.reserve(ds.patterns().size());
  for (std::size_t u = 0; u < ds.patterns().size(); ++u) {
    out.emplace_back(ds.patterns()[u], ds.pattern_counts()[u]);
  }
  return out;
}

}  // namespace genoclust
