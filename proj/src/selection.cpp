// SPDX-License-Identifier: Apache-2.0
#include "selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rng.hpp"

namespace genoclust {

namespace {

constexpr long long kBoundSaturation = 1'000'000'000;

std::vector<int> full_locus_set(int num_loci) {
  std::vector<int> s(num_loci);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

// BIC descending, then smaller dimension, smaller k, lexicographically
// smaller s. Mirrors the minimality convention for the selected model.
bool fit_better(const FitResult& a, const FitResult& b,
                const AlleleIndex& index) {
  if (a.bic != b.bic) return a.bic > b.bic;
  const long long da = model_dimension(a.spec, index);
  const long long db = model_dimension(b.spec, index);
  if (da != db) return da < db;
  if (a.spec.k != b.spec.k) return a.spec.k < b.spec.k;
  return a.spec.s < b.spec.s;
}

}  // namespace

long long k_max_bound(const AlleleIndex& index, std::span<const int> s) {
  double log_num = 0.0;
  double denom = 1.0;
  for (int l : s) {
    log_num += std::log(static_cast<double>(index.distinct_genotypes(l)));
    denom += index.allele_count(l) - 1;
  }
  if (log_num > std::log(static_cast<double>(kBoundSaturation)) +
                    std::log(denom)) {
    return kBoundSaturation;
  }
  double num = 1.0;
  for (int l : s) num *= static_cast<double>(index.distinct_genotypes(l));
  const long long bound = static_cast<long long>(std::floor(num / denom));
  return std::max(1LL, bound);
}

long long k_max_bound(const AlleleIndex& index) {
  const std::vector<int> full = full_locus_set(index.num_loci());
  return k_max_bound(index, full);
}

std::optional<std::array<std::vector<int>, 3>> identifiability_check(
    int k, std::span<const int> s, const AlleleIndex& index) {
  const int m = static_cast<int>(s.size());
  if (m < 3) return std::nullopt;

  const long long need = 2LL * k + 2;
  auto satisfied = [&](const std::array<std::vector<int>, 3>& parts) {
    long long total = 0;
    for (const auto& part : parts) {
      long long g = 1;
      for (int l : part) {
        g = std::min<long long>(g * index.distinct_genotypes(l),
                                static_cast<long long>(k));
        if (g >= k) break;
      }
      total += std::min<long long>(g, k);
    }
    return total >= need;
  };

  if (m <= 12) {
    long long combos = 1;
    for (int i = 0; i < m; ++i) combos *= 3;
    for (long long code = 0; code < combos; ++code) {
      std::array<std::vector<int>, 3> parts;
      long long c = code;
      for (int i = 0; i < m; ++i) {
        parts[c % 3].push_back(s[i]);
        c /= 3;
      }
      if (parts[0].empty() || parts[1].empty() || parts[2].empty()) continue;
      if (satisfied(parts)) return parts;
    }
    return std::nullopt;
  }

  // Greedy balance: largest genotype counts first, each locus to the part
  // with the smallest running product.
  std::vector<int> order(s.begin(), s.end());
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (index.distinct_genotypes(x) != index.distinct_genotypes(y)) {
      return index.distinct_genotypes(x) > index.distinct_genotypes(y);
    }
    return x < y;
  });
  std::array<std::vector<int>, 3> parts;
  std::array<double, 3> log_size{0.0, 0.0, 0.0};
  for (int l : order) {
    int target = 0;
    for (int p = 1; p < 3; ++p) {
      if (log_size[p] < log_size[target]) target = p;
    }
    parts[target].push_back(l);
    log_size[target] += std::log(static_cast<double>(index.distinct_genotypes(l)));
  }
  for (auto& part : parts) std::sort(part.begin(), part.end());
  if (parts[0].empty() || parts[1].empty() || parts[2].empty()) {
    return std::nullopt;
  }
  if (satisfied(parts)) return parts;
  return std::nullopt;
}

const FitResult& FitCache::fit(int k, std::vector<int> s) {
  std::sort(s.begin(), s.end());
  Key key{k, s};
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  EmConfig cfg = base_;
  std::uint64_t seed = mix_seed(base_.seed, 0x6d0de15eULL);
  seed = mix_seed(seed, static_cast<std::uint64_t>(k));
  for (int l : s) seed = mix_seed(seed, static_cast<std::uint64_t>(l) + 1);
  cfg.seed = seed;

  ModelSpec spec{k, std::move(s)};
  FitResult fit = run_em(ds_, spec, cfg);
  return cache_.emplace(std::move(key), std::move(fit)).first->second;
}

StepDecision exclusion_step(const GenotypeDataset& /*ds*/, int k,
                            const std::vector<int>& s, FitCache& cache) {
  StepDecision d;
  if (s.size() < 2) return d;  // s must stay non-empty
  d.applicable = true;
  d.bic_current = cache.fit(k, s).bic;
  for (int l : s) {
    std::vector<int> reduced;
    reduced.reserve(s.size() - 1);
    for (int x : s) {
      if (x != l) reduced.push_back(x);
    }
    const double bic = cache.fit(k, reduced).bic;
    if (d.candidate < 0 || bic > d.bic_candidate) {
      d.candidate = l;
      d.bic_candidate = bic;
    }
  }
  d.accepted = d.bic_current - d.bic_candidate <= 0.0;
  return d;
}

StepDecision inclusion_step(const GenotypeDataset& ds, int k,
                            const std::vector<int>& s, FitCache& cache) {
  StepDecision d;
  const std::vector<int> comp = ModelSpec{k, s}.complement(ds.num_loci());
  if (comp.empty()) return d;
  d.applicable = true;
  d.bic_current = cache.fit(k, s).bic;
  for (int l : comp) {
    std::vector<int> extended = s;
    extended.insert(std::lower_bound(extended.begin(), extended.end(), l), l);
    const double bic = cache.fit(k, extended).bic;
    if (d.candidate < 0 || bic > d.bic_candidate) {
      d.candidate = l;
      d.bic_candidate = bic;
    }
  }
  d.accepted = d.bic_candidate - d.bic_current > 0.0;
  return d;
}

StepwiseOutcome stepwise_select_s(const GenotypeDataset& ds, int k,
                                  FitCache& cache,
                                  std::vector<SelectionStep>* trace) {
  const int L = ds.num_loci();
  const AlleleIndex& index = ds.index();
  std::vector<int> s = full_locus_set(L);

  auto record = [&](StepKind kind, int candidate, double bic_current,
                    double bic_candidate, StopReason reason) {
    if (!trace) return;
    trace->push_back(SelectionStep{kind, k, s, candidate, bic_current,
                                   bic_candidate, reason});
  };

  StepwiseOutcome out;
  const FitResult* current = &cache.fit(k, s);
  out.best_fit = current;
  out.best_s = s;
  auto visit = [&](const FitResult& f) {
    if (fit_better(f, *out.best_fit, index)) {
      out.best_fit = &f;
      out.best_s = f.spec.s;
    }
  };

  const long long pass_limit = static_cast<long long>(L) * L;
  StopReason reason = StopReason::none;
  for (long long pass = 0; pass < pass_limit && reason == StopReason::none;
       ++pass) {
    bool changed = false;
    int removed_this_pass = -1;

    StepDecision ex = exclusion_step(ds, k, s, cache);
    if (ex.applicable) {
      record(StepKind::exclusion_proposal, ex.candidate, ex.bic_current,
             ex.bic_candidate, StopReason::none);
      if (ex.accepted) {
        record(StepKind::exclusion_accepted, ex.candidate, ex.bic_current,
               ex.bic_candidate, StopReason::none);
        s.erase(std::find(s.begin(), s.end(), ex.candidate));
        removed_this_pass = ex.candidate;
        changed = true;
        current = &cache.fit(k, s);
        visit(*current);
      } else {
        record(StepKind::exclusion_rejected, ex.candidate, ex.bic_current,
               ex.bic_candidate, StopReason::none);
      }
    }

    StepDecision in = inclusion_step(ds, k, s, cache);
    if (!in.applicable) {
      reason = StopReason::s_complement_empty;
      break;
    }
    record(StepKind::inclusion_proposal, in.candidate, in.bic_current,
           in.bic_candidate, StopReason::none);
    if (in.accepted && in.candidate == removed_this_pass) {
      // Re-accepting the locus just removed would cycle; cached fits make
      // this unreachable, kept as a guard.
      reason = StopReason::inclusion_cycle;
      break;
    }
    if (in.accepted) {
      record(StepKind::inclusion_accepted, in.candidate, in.bic_current,
             in.bic_candidate, StopReason::none);
      s.insert(std::lower_bound(s.begin(), s.end(), in.candidate),
               in.candidate);
      changed = true;
      current = &cache.fit(k, s);
      visit(*current);
    } else {
      record(StepKind::inclusion_rejected, in.candidate, in.bic_current,
             in.bic_candidate, StopReason::none);
    }

    if (!changed) reason = StopReason::no_change;
  }
  if (reason == StopReason::none) reason = StopReason::pass_limit;

  record(StepKind::stop, -1, current->bic, current->bic, reason);
  out.final_s = s;
  out.stop = reason;
  return out;
}

SelectionResult select_model(const GenotypeDataset& ds,
                             const SelectionConfig& config) {
  config.em.validate();
  if (ds.n() < 2) {
    throw std::invalid_argument("model selection needs at least 2 individuals");
  }
  if (config.k_ceiling < 1) {
    throw std::invalid_argument("cluster ceiling must be >= 1");
  }
  const int L = ds.num_loci();
  if (config.exhaustive && L > 16) {
    throw std::invalid_argument("exhaustive subset search is limited to 16 loci");
  }

  SelectionResult res;
  res.k_cap = k_max_bound(ds.index());
  res.k_max_used = static_cast<int>(
      std::min<long long>(config.k_ceiling, res.k_cap));
  res.selection_enabled = !config.no_selection;

  FitCache cache(ds, config.em);
  const std::vector<int> full = full_locus_set(L);

  for (int k = 1; k <= res.k_max_used; ++k) {
    PerKResult row;
    row.k = k;
    if (config.no_selection) {
      const FitResult& f = cache.fit(k, full);
      row.best_s = full;
      row.final_s = full;
      row.loglik = f.loglik;
      row.bic = f.bic;
    } else if (config.exhaustive) {
      const FitResult* best = nullptr;
      for (unsigned mask = 1; mask < (1u << L); ++mask) {
        std::vector<int> s;
        for (int l = 0; l < L; ++l) {
          if (mask & (1u << l)) s.push_back(l);
        }
        const FitResult& f = cache.fit(k, s);
        if (!best || fit_better(f, *best, ds.index())) best = &f;
      }
      row.best_s = best->spec.s;
      row.final_s = best->spec.s;
      row.loglik = best->loglik;
      row.bic = best->bic;
    } else {
      StepwiseOutcome walk = stepwise_select_s(ds, k, cache, &res.trace);
      row.best_s = walk.best_s;
      row.final_s = walk.final_s;
      row.loglik = walk.best_fit->loglik;
      row.bic = walk.best_fit->bic;
      row.stop = walk.stop;
    }
    res.per_k.push_back(std::move(row));
  }

  const FitResult* winner = nullptr;
  for (const auto& [key, fit] : cache.all()) {
    if (!winner || fit_better(fit, *winner, ds.index())) winner = &fit;
  }
  res.best = *winner;
  res.k_hat = winner->spec.k;
  res.s_hat = winner->spec.s;
  res.s_applicable = res.k_hat > 1;
  res.models_fitted = cache.size();
  return res;
}

}  // namespace genoclust
