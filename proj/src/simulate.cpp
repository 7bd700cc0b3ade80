// SPDX-License-Identifier: Apache-2.0
#include "simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"

namespace genoclust {

namespace {

std::vector<std::string> tokens_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

long long to_int(const std::string& tok, int line, const std::string& field) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, 0, "field '" + field + "': '" + tok +
                                  "' is not an integer");
  }
  return v;
}

double to_double(const std::string& tok, int line, const std::string& field) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, 0,
                     "field '" + field + "': '" + tok + "' is not a number");
  }
}

void check_simplex(const std::vector<double>& freqs, const std::string& field) {
  double sum = 0.0;
  for (double f : freqs) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw std::invalid_argument("scenario field '" + field +
                                  "': entries must lie in [0, 1]");
    }
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("scenario field '" + field +
                                "': entries must sum to 1");
  }
}

}  // namespace

std::vector<int> SimScenario::complement() const {
  std::vector<int> out;
  std::size_t si = 0;
  for (int l = 0; l < num_loci; ++l) {
    if (si < s0.size() && s0[si] == l) {
      ++si;
    } else {
      out.push_back(l);
    }
  }
  return out;
}

void SimScenario::validate() const {
  if (n < 1) throw std::invalid_argument("scenario field 'n': must be >= 1");
  if (num_loci < 1) {
    throw std::invalid_argument("scenario field 'loci': must be >= 1");
  }
  if (static_cast<int>(allele_counts.size()) != num_loci) {
    throw std::invalid_argument(
        "scenario field 'alleles': expected one count per locus");
  }
  for (int a : allele_counts) {
    if (a < 1) {
      throw std::invalid_argument(
          "scenario field 'alleles': counts must be >= 1");
    }
  }
  if (k0 < 1) {
    throw std::invalid_argument("scenario field 'populations': must be >= 1");
  }
  if (static_cast<int>(pi.size()) != k0) {
    throw std::invalid_argument(
        "scenario field 'proportions': expected one entry per population");
  }
  for (double p : pi) {
    if (!(p > 0.0)) {
      throw std::invalid_argument(
          "scenario field 'proportions': entries must be positive");
    }
  }
  check_simplex(pi, "proportions");
  if (s0.empty()) {
    throw std::invalid_argument(
        "scenario field 'clustering_loci': must name at least one locus");
  }
  if (!std::is_sorted(s0.begin(), s0.end()) ||
      std::adjacent_find(s0.begin(), s0.end()) != s0.end() || s0.front() < 0 ||
      s0.back() >= num_loci) {
    throw std::invalid_argument(
        "scenario field 'clustering_loci': loci must be distinct and in range");
  }
  if (static_cast<int>(alpha.size()) != k0) {
    throw std::invalid_argument(
        "scenario: expected a 'freq' table for every population");
  }
  for (int k = 0; k < k0; ++k) {
    if (alpha[k].size() != s0.size()) {
      throw std::invalid_argument(
          "scenario: expected a 'freq' row for every clustering locus");
    }
    for (std::size_t si = 0; si < s0.size(); ++si) {
      const std::string field = "freq " + std::to_string(s0[si] + 1) + " " +
                                std::to_string(k + 1);
      if (static_cast<int>(alpha[k][si].size()) != allele_counts[s0[si]]) {
        throw std::invalid_argument("scenario field '" + field +
                                    "': expected one frequency per allele");
      }
      check_simplex(alpha[k][si], field);
    }
  }
  const std::vector<int> comp = complement();
  if (beta.size() != comp.size()) {
    throw std::invalid_argument(
        "scenario: expected a 'noise' row for every non-clustering locus");
  }
  for (std::size_t ci = 0; ci < comp.size(); ++ci) {
    const std::string field = "noise " + std::to_string(comp[ci] + 1);
    if (static_cast<int>(beta[ci].size()) != allele_counts[comp[ci]]) {
      throw std::invalid_argument("scenario field '" + field +
                                  "': expected one frequency per allele");
    }
    check_simplex(beta[ci], field);
  }
  if (replicates < 1) {
    throw std::invalid_argument("scenario field 'replicates': must be >= 1");
  }
}

SimScenario parse_scenario(std::istream& in) {
  SimScenario sc;
  std::map<std::pair<int, int>, std::vector<double>> freq_rows;
  std::map<int, std::vector<double>> noise_rows;
  std::map<std::string, int> seen;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (!tokens_of(line).empty()) {
        throw ParseError(lineno, 0, "expected 'key = values'");
      }
      continue;
    }
    const std::vector<std::string> lhs = tokens_of(line.substr(0, eq));
    const std::vector<std::string> rhs = tokens_of(line.substr(eq + 1));
    if (lhs.empty()) throw ParseError(lineno, 0, "missing key before '='");
    if (rhs.empty()) {
      throw ParseError(lineno, 0, "missing values after '=' for '" + lhs[0] + "'");
    }
    const std::string& key = lhs[0];

    auto expect_single = [&](const char* name) {
      if (lhs.size() != 1 || rhs.size() != 1) {
        throw ParseError(lineno, 0,
                         std::string("field '") + name + "' takes one value");
      }
    };
    auto mark_seen = [&](const std::string& k) {
      if (seen[k]++) {
        throw ParseError(lineno, 0, "field '" + k + "' given twice");
      }
    };

    if (key == "n") {
      expect_single("n");
      mark_seen(key);
      sc.n = static_cast<int>(to_int(rhs[0], lineno, key));
    } else if (key == "loci") {
      expect_single("loci");
      mark_seen(key);
      sc.num_loci = static_cast<int>(to_int(rhs[0], lineno, key));
    } else if (key == "alleles") {
      mark_seen(key);
      for (const auto& tok : rhs) {
        sc.allele_counts.push_back(static_cast<int>(to_int(tok, lineno, key)));
      }
    } else if (key == "populations") {
      expect_single("populations");
      mark_seen(key);
      sc.k0 = static_cast<int>(to_int(rhs[0], lineno, key));
    } else if (key == "proportions") {
      mark_seen(key);
      for (const auto& tok : rhs) sc.pi.push_back(to_double(tok, lineno, key));
    } else if (key == "clustering_loci") {
      mark_seen(key);
      for (const auto& tok : rhs) {
        sc.s0.push_back(static_cast<int>(to_int(tok, lineno, key)) - 1);
      }
      std::sort(sc.s0.begin(), sc.s0.end());
    } else if (key == "replicates") {
      expect_single("replicates");
      mark_seen(key);
      sc.replicates = static_cast<int>(to_int(rhs[0], lineno, key));
    } else if (key == "seed") {
      expect_single("seed");
      mark_seen(key);
      sc.seed = static_cast<std::uint64_t>(to_int(rhs[0], lineno, key));
    } else if (key == "freq") {
      if (lhs.size() != 3) {
        throw ParseError(lineno, 0, "expected 'freq <locus> <population> = ...'");
      }
      const int l = static_cast<int>(to_int(lhs[1], lineno, "freq locus")) - 1;
      const int k =
          static_cast<int>(to_int(lhs[2], lineno, "freq population")) - 1;
      if (!freq_rows.emplace(std::make_pair(l, k), std::vector<double>{}).second) {
        throw ParseError(lineno, 0, "duplicate 'freq' row");
      }
      auto& row = freq_rows[{l, k}];
      for (const auto& tok : rhs) row.push_back(to_double(tok, lineno, "freq"));
    } else if (key == "noise") {
      if (lhs.size() != 2) {
        throw ParseError(lineno, 0, "expected 'noise <locus> = ...'");
      }
      const int l = static_cast<int>(to_int(lhs[1], lineno, "noise locus")) - 1;
      if (!noise_rows.emplace(l, std::vector<double>{}).second) {
        throw ParseError(lineno, 0, "duplicate 'noise' row");
      }
      auto& row = noise_rows[l];
      for (const auto& tok : rhs) row.push_back(to_double(tok, lineno, "noise"));
    } else {
      throw ParseError(lineno, 0, "unknown field '" + key + "'");
    }
  }

  for (const char* required :
       {"n", "loci", "alleles", "populations", "proportions",
        "clustering_loci"}) {
    if (!seen.count(required)) {
      throw std::invalid_argument(std::string("scenario field '") + required +
                                  "': missing");
    }
  }

  // Assemble frequency tables in (population, clustering-locus) order.
  sc.alpha.assign(std::max(sc.k0, 0), {});
  for (int k = 0; k < sc.k0; ++k) {
    for (int l : sc.s0) {
      auto it = freq_rows.find({l, k});
      if (it == freq_rows.end()) {
        throw std::invalid_argument(
            "scenario: missing 'freq " + std::to_string(l + 1) + " " +
            std::to_string(k + 1) + "'");
      }
      sc.alpha[k].push_back(it->second);
      freq_rows.erase(it);
    }
  }
  if (!freq_rows.empty()) {
    const auto& [lk, row] = *freq_rows.begin();
    throw std::invalid_argument(
        "scenario: unexpected 'freq " + std::to_string(lk.first + 1) + " " +
        std::to_string(lk.second + 1) + "' (not a clustering locus/population)");
  }
  for (int l : sc.complement()) {
    auto it = noise_rows.find(l);
    if (it == noise_rows.end()) {
      throw std::invalid_argument("scenario: missing 'noise " +
                                  std::to_string(l + 1) + "'");
    }
    sc.beta.push_back(it->second);
    noise_rows.erase(it);
  }
  if (!noise_rows.empty()) {
    throw std::invalid_argument(
        "scenario: unexpected 'noise " +
        std::to_string(noise_rows.begin()->first + 1) +
        "' (clustering locus or out of range)");
  }

  sc.validate();
  return sc;
}

SimScenario parse_scenario(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

std::string serialize_scenario(const SimScenario& sc) {
  std::ostringstream out;
  out << "n = " << sc.n << '\n';
  out << "loci = " << sc.num_loci << '\n';
  out << "alleles =";
  for (int a : sc.allele_counts) out << ' ' << a;
  out << '\n';
  out << "populations = " << sc.k0 << '\n';
  out << "proportions =";
  for (double p : sc.pi) out << ' ' << p;
  out << '\n';
  out << "clustering_loci =";
  for (int l : sc.s0) out << ' ' << l + 1;
  out << '\n';
  out << "replicates = " << sc.replicates << '\n';
  out << "seed = " << sc.seed << '\n';
  for (int k = 0; k < sc.k0; ++k) {
    for (std::size_t si = 0; si < sc.s0.size(); ++si) {
      out << "freq " << sc.s0[si] + 1 << ' ' << k + 1 << " =";
      for (double f : sc.alpha[k][si]) out << ' ' << f;
      out << '\n';
    }
  }
  const std::vector<int> comp = sc.complement();
  for (std::size_t ci = 0; ci < comp.size(); ++ci) {
    out << "noise " << comp[ci] + 1 << " =";
    for (double f : sc.beta[ci]) out << ' ' << f;
    out << '\n';
  }
  return out.str();
}

SimResult simulate_dataset(const SimScenario& sc, std::uint64_t seed,
                           int replicate) {
  sc.validate();
  Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(replicate));

  std::vector<int> s0_pos(sc.num_loci, -1);
  for (std::size_t si = 0; si < sc.s0.size(); ++si) s0_pos[sc.s0[si]] = si;
  const std::vector<int> comp = sc.complement();
  std::vector<int> comp_pos(sc.num_loci, -1);
  for (std::size_t ci = 0; ci < comp.size(); ++ci) comp_pos[comp[ci]] = ci;

  std::vector<int> z(sc.n);
  std::vector<std::vector<std::pair<long long, long long>>> raw_rows(
      sc.n, std::vector<std::pair<long long, long long>>(sc.num_loci));
  for (int i = 0; i < sc.n; ++i) {
    z[i] = rng.categorical(sc.pi);
    for (int l = 0; l < sc.num_loci; ++l) {
      const std::vector<double>& freqs = s0_pos[l] >= 0
                                             ? sc.alpha[z[i]][s0_pos[l]]
                                             : sc.beta[comp_pos[l]];
      const long long a = rng.categorical(freqs) + 1;
      const long long b = rng.categorical(freqs) + 1;
      raw_rows[i][l] = {a, b};
    }
  }

  std::vector<std::string> locus_names(sc.num_loci);
  for (int l = 0; l < sc.num_loci; ++l) locus_names[l] = "L" + std::to_string(l + 1);
  std::vector<std::string> ids(sc.n);
  for (int i = 0; i < sc.n; ++i) ids[i] = "ind" + std::to_string(i + 1);

  return SimResult{build_dataset(std::move(locus_names), std::move(ids), raw_rows),
                   std::move(z)};
}

SimResult simulate_dataset(const SimScenario& sc, int replicate) {
  return simulate_dataset(sc, sc.seed, replicate);
}

double score_recovery(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("assignment vectors differ in length");
  }
  if (truth.empty()) {
    throw std::invalid_argument("assignment vectors are empty");
  }
  const int n = static_cast<int>(truth.size());

  auto compact = [](std::span<const int> labels) {
    std::vector<int> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    return distinct;
  };
  const std::vector<int> t_labels = compact(truth);
  const std::vector<int> p_labels = compact(predicted);
  const int m = static_cast<int>(std::max(t_labels.size(), p_labels.size()));

  std::vector<std::vector<long long>> confusion(m, std::vector<long long>(m, 0));
  for (int i = 0; i < n; ++i) {
    const int t = static_cast<int>(
        std::lower_bound(t_labels.begin(), t_labels.end(), truth[i]) -
        t_labels.begin());
    const int p = static_cast<int>(
        std::lower_bound(p_labels.begin(), p_labels.end(), predicted[i]) -
        p_labels.begin());
    ++confusion[t][p];
  }

  long long matched = 0;
  if (m <= 8) {
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      long long hits = 0;
      for (int p = 0; p < m; ++p) hits += confusion[perm[p]][p];
      matched = std::max(matched, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<char> row_used(m, 0), col_used(m, 0);
    for (int round = 0; round < m; ++round) {
      long long best = -1;
      int bt = -1, bp = -1;
      for (int t = 0; t < m; ++t) {
        if (row_used[t]) continue;
        for (int p = 0; p < m; ++p) {
          if (col_used[p]) continue;
          if (confusion[t][p] > best) {
            best = confusion[t][p];
            bt = t;
            bp = p;
          }
        }
      }
      row_used[bt] = 1;
      col_used[bp] = 1;
      matched += best;
    }
  }
  return 100.0 * (1.0 - static_cast<double>(matched) / n);
}

}  // namespace genoclust
