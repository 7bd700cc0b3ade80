// SPDX-License-Identifier: Apache-2.0
#include "em.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "rng.hpp"

namespace genoclust {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPiFloor = 1e-8;

int resolve_threads(int requested, int jobs) {
  if (requested <= 0) {
    requested = static_cast<int>(std::thread::hardware_concurrency());
    if (requested <= 0) requested = 1;
  }
  return std::max(1, std::min(requested, jobs));
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

int genotype_id(const Genotype& g) { return g.b * (g.b + 1) / 2 + g.a; }

// Turns responsibility-weighted allele-copy counts into parameters:
// water-filled frequency rows, floored mixing proportions, pooled beta.
// A zero-mass cluster gets the pooled frequencies and raises the flag.
MixtureParams assemble_params(const GenotypeDataset& ds, const ModelSpec& spec,
                              std::vector<std::vector<std::vector<double>>>&& counts,
                              std::vector<double>&& mass, double freq_floor,
                              DegeneracyFlags* flags) {
  const int K = spec.k;
  MixtureParams out;
  out.alpha.assign(K, {});
  bool clamped = false;
  bool near_empty = false;
  for (int k = 0; k < K; ++k) {
    out.alpha[k].resize(spec.s.size());
    for (std::size_t si = 0; si < spec.s.size(); ++si) {
      const int l = spec.s[si];
      std::vector<double> row = std::move(counts[k][si]);
      if (mass[k] == 0.0) {
        near_empty = true;
        for (std::size_t j = 0; j < row.size(); ++j) {
          row[j] = static_cast<double>(ds.allele_copies()[l][j]);
        }
      }
      clamped |= clamp_to_simplex(row, freq_floor);
      out.alpha[k][si] = std::move(row);
    }
  }

  out.pi = std::move(mass);
  near_empty |= clamp_to_simplex(out.pi, kPiFloor);

  const std::vector<int> comp = spec.complement(ds.num_loci());
  out.beta = estimate_beta(ds, comp);

  if (flags) {
    flags->near_empty_cluster |= near_empty;
    flags->clamped_frequency |= clamped;
  }
  return out;
}

// Shared weighted M-step core: items are genotype rows (weight 1 each) or
// distinct patterns (weight n_u).
MixtureParams m_step_weighted(const GenotypeDataset& ds, const ModelSpec& spec,
                              const std::vector<std::vector<Genotype>>& items,
                              const double* item_weight,
                              const Responsibilities& tau, double freq_floor,
                              DegeneracyFlags* flags) {
  const int K = spec.k;
  const int U = static_cast<int>(items.size());
  const auto& index = ds.index();

  std::vector<double> mass(K, 0.0);
  for (int u = 0; u < U; ++u) {
    const double w = item_weight ? item_weight[u] : 1.0;
    for (int k = 0; k < K; ++k) mass[k] += w * tau[u][k];
  }

  std::vector<std::vector<std::vector<double>>> counts(K);
  for (int k = 0; k < K; ++k) {
    counts[k].resize(spec.s.size());
    for (std::size_t si = 0; si < spec.s.size(); ++si) {
      const int l = spec.s[si];
      counts[k][si].assign(index.allele_count(l), 0.0);
      if (mass[k] == 0.0) continue;
      for (int u = 0; u < U; ++u) {
        const double w = (item_weight ? item_weight[u] : 1.0) * tau[u][k];
        const Genotype& g = items[u][l];
        counts[k][si][g.a] += w;
        counts[k][si][g.b] += w;
      }
    }
  }
  return assemble_params(ds, spec, std::move(counts), std::move(mass),
                         freq_floor, flags);
}

// Per-fit constants and scratch for the pattern-space EM loop.
class Engine {
 public:
  Engine(const GenotypeDataset& ds, const ModelSpec& spec)
      : ds_(ds),
        spec_(spec),
        comp_(spec.complement(ds.num_loci())),
        K_(spec.k),
        S_(static_cast<int>(spec.s.size())),
        U_(static_cast<int>(ds.patterns().size())) {
    beta_ = estimate_beta(ds_, comp_);

    weights_.resize(U_);
    for (int u = 0; u < U_; ++u) {
      weights_[u] = static_cast<double>(ds.pattern_counts()[u]);
    }

    pattern_gid_.assign(S_, std::vector<int>(U_));
    for (int si = 0; si < S_; ++si) {
      const int l = spec_.s[si];
      for (int u = 0; u < U_; ++u) {
        pattern_gid_[si][u] = genotype_id(ds.patterns()[u][l]);
      }
    }

    sc_const_.assign(U_, 0.0);
    for (int u = 0; u < U_; ++u) {
      double logp = 0.0;
      for (std::size_t ci = 0; ci < comp_.size(); ++ci) {
        logp += std::log(
            hwe_genotype_prob(ds.patterns()[u][comp_[ci]], beta_[ci]));
      }
      sc_const_[u] = logp;
    }
  }

  struct RestartOutcome {
    MixtureParams theta;
    double loglik = kNegInf;
    int iterations = 0;
    bool converged = false;
    DegeneracyFlags flags;
  };

  RestartOutcome run_restart(int restart, const EmConfig& cfg) const {
    RestartOutcome out;
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(restart));
    // Every third restart seeds from random exemplars instead of soft
    // random responsibilities; exemplar starts can reach sharp optima whose
    // basins soft starts never enter (e.g. a cluster locked onto a single
    // rare genotype).
    const bool anchored = restart % 3 == 2 && ds_.n() >= K_;
    MixtureParams theta = anchored ? anchored_params(rng, cfg, &out.flags)
                                   : initial_params(rng, cfg, &out.flags);

    // Per clustering locus: genotype-id-major table with the K cluster
    // values contiguous, so the per-pattern accumulation runs down a dense
    // row per locus.
    std::vector<std::vector<double>> lut(S_);
    for (int si = 0; si < S_; ++si) {
      const int a = ds_.index().allele_count(spec_.s[si]);
      lut[si].resize(static_cast<std::size_t>(a * (a + 1) / 2) * K_);
    }

    auto make_count_buffers = [&] {
      std::vector<std::vector<std::vector<double>>> buffers(K_);
      for (int k = 0; k < K_; ++k) {
        buffers[k].resize(S_);
        for (int si = 0; si < S_; ++si) {
          buffers[k][si].assign(ds_.index().allele_count(spec_.s[si]), 0.0);
        }
      }
      return buffers;
    };
    std::vector<std::vector<std::vector<double>>> counts = make_count_buffers();
    std::vector<double> mass(K_, 0.0);

    double prev_stat = 0.0;
    std::vector<double> logits(K_);
    std::vector<double> scaled(K_);
    std::vector<double> logpi(K_);
    for (;;) {
      // Genotype log-probability tables under the current theta.
      for (int k = 0; k < K_; ++k) logpi[k] = std::log(theta.pi[k]);
      for (int si = 0; si < S_; ++si) {
        for (int k = 0; k < K_; ++k) {
          const auto& freqs = theta.alpha[k][si];
          double* table = lut[si].data() + k;
          int gid = 0;
          for (int b = 0; b < static_cast<int>(freqs.size()); ++b) {
            for (int a = 0; a <= b; ++a) {
              const double factor = (a == b) ? 1.0 : 2.0;
              table[static_cast<std::size_t>(gid++) * K_] =
                  std::log(factor * freqs[a] * freqs[b]);
            }
          }
        }
      }

      for (int k = 0; k < K_; ++k) {
        mass[k] = 0.0;
        for (int si = 0; si < S_; ++si) {
          std::fill(counts[k][si].begin(), counts[k][si].end(), 0.0);
        }
      }

      // One pass per iteration: responsibilities, log-likelihood, and the
      // M-step's weighted allele-copy counts together.
      double loglik = 0.0;
      double complete = 0.0;
      for (int u = 0; u < U_; ++u) {
        for (int k = 0; k < K_; ++k) logits[k] = logpi[k];
        for (int si = 0; si < S_; ++si) {
          const double* row =
              lut[si].data() +
              static_cast<std::size_t>(pattern_gid_[si][u]) * K_;
          for (int k = 0; k < K_; ++k) logits[k] += row[k];
        }
        double best = kNegInf;
        for (int k = 0; k < K_; ++k) {
          if (logits[k] > best) best = logits[k];
        }
        if (best == kNegInf) {
          throw NumericError("zero mixture likelihood for an observed genotype");
        }
        double sum = 0.0;
        for (int k = 0; k < K_; ++k) {
          scaled[k] = std::exp(logits[k] - best);
          sum += scaled[k];
        }
        loglik += weights_[u] * (best + std::log(sum) + sc_const_[u]);
        if (cfg.stop_rule == StopRule::expected_complete_loglik) {
          double q = sc_const_[u];
          for (int k = 0; k < K_; ++k) q += scaled[k] / sum * logits[k];
          complete += weights_[u] * q;
        }
        for (int k = 0; k < K_; ++k) {
          const double w = weights_[u] * (scaled[k] / sum);
          mass[k] += w;
          auto& rows = counts[k];
          const auto& pattern = ds_.patterns()[u];
          for (int si = 0; si < S_; ++si) {
            const Genotype& g = pattern[spec_.s[si]];
            rows[si][g.a] += w;
            rows[si][g.b] += w;
          }
        }
      }

      if (cfg.on_iteration) {
        cfg.on_iteration(EmIteration{restart, out.iterations, loglik, theta});
      }

      const double stat =
          cfg.stop_rule == StopRule::observed_loglik ? loglik : complete;
      out.loglik = loglik;
      out.theta = theta;
      if (out.iterations > 0 && std::abs(stat - prev_stat) < cfg.epsilon) {
        out.converged = true;
        break;
      }
      if (out.iterations >= cfg.max_iterations) break;
      prev_stat = stat;

      theta = assemble_params(ds_, spec_, std::move(counts), std::move(mass),
                              cfg.freq_floor, &out.flags);
      counts = make_count_buffers();
      mass.assign(K_, 0.0);
      ++out.iterations;
    }
    return out;
  }

 private:
  // Flat Dirichlet responsibilities per individual, then one M-step.
  MixtureParams initial_params(Rng& rng, const EmConfig& cfg,
                               DegeneracyFlags* flags) const {
    Responsibilities tau(ds_.n(), std::vector<double>(K_));
    for (int i = 0; i < ds_.n(); ++i) {
      double sum = 0.0;
      for (int k = 0; k < K_; ++k) {
        tau[i][k] = rng.exponential();
        sum += tau[i][k];
      }
      for (int k = 0; k < K_; ++k) tau[i][k] /= sum;
    }
    return m_step_weighted(ds_, spec_, ds_.rows(), nullptr, tau,
                           cfg.freq_floor, flags);
  }

  // Clustering-style start: K distinct random exemplars, each individual
  // hard-assigned to the nearest (allele mismatches over the clustering
  // loci, ties to the lowest cluster), then one M-step.
  MixtureParams anchored_params(Rng& rng, const EmConfig& cfg,
                                DegeneracyFlags* flags) const {
    std::vector<int> anchors;
    while (static_cast<int>(anchors.size()) < K_) {
      const int i = static_cast<int>(rng.next() % ds_.n());
      if (std::find(anchors.begin(), anchors.end(), i) == anchors.end()) {
        anchors.push_back(i);
      }
    }
    auto distance = [&](const std::vector<Genotype>& a,
                        const std::vector<Genotype>& b) {
      int d = 0;
      for (int l : spec_.s) {
        if (a[l] == b[l]) continue;
        const bool share = a[l].a == b[l].a || a[l].a == b[l].b ||
                           a[l].b == b[l].a || a[l].b == b[l].b;
        d += share ? 1 : 2;
      }
      return d;
    };
    Responsibilities tau(ds_.n(), std::vector<double>(K_, 0.0));
    for (int i = 0; i < ds_.n(); ++i) {
      int best_k = 0;
      int best_d = distance(ds_.rows()[i], ds_.rows()[anchors[0]]);
      for (int k = 1; k < K_; ++k) {
        const int d = distance(ds_.rows()[i], ds_.rows()[anchors[k]]);
        if (d < best_d) {
          best_d = d;
          best_k = k;
        }
      }
      tau[i][best_k] = 1.0;
    }
    return m_step_weighted(ds_, spec_, ds_.rows(), nullptr, tau,
                           cfg.freq_floor, flags);
  }

  const GenotypeDataset& ds_;
  const ModelSpec& spec_;
  std::vector<int> comp_;
  std::vector<std::vector<double>> beta_;
  int K_, S_, U_;
  std::vector<double> weights_;
  std::vector<std::vector<int>> pattern_gid_;
  std::vector<double> sc_const_;
};

}  // namespace

void EmConfig::validate() const {
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be >= 1");
  }
  if (!(freq_floor > 0.0 && freq_floor < 1e-4)) {
    throw std::invalid_argument("frequency floor must lie in (0, 1e-4)");
  }
}

bool clamp_to_simplex(std::vector<double>& w, double floor) {
  const int m = static_cast<int>(w.size());
  if (m == 1) {
    w[0] = 1.0;
    return false;
  }
  if (floor * m >= 0.5) {
    throw std::invalid_argument("floor too large for the simplex dimension");
  }
  std::vector<unsigned char> clamped(m, 0);
  int num_clamped = 0;
  for (;;) {
    double active_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (!clamped[j]) active_sum += w[j];
    }
    const double lambda = active_sum / (1.0 - floor * num_clamped);
    bool changed = false;
    for (int j = 0; j < m; ++j) {
      if (!clamped[j] && w[j] < floor * lambda) {
        clamped[j] = 1;
        ++num_clamped;
        changed = true;
      }
    }
    if (!changed) {
      for (int j = 0; j < m; ++j) w[j] = clamped[j] ? floor : w[j] / lambda;
      return num_clamped > 0;
    }
  }
}

std::vector<std::vector<double>> estimate_beta(const GenotypeDataset& ds,
                                               std::span<const int> loci) {
  const double copies = 2.0 * static_cast<double>(ds.n());
  std::vector<std::vector<double>> beta;
  beta.reserve(loci.size());
  for (int l : loci) {
    std::vector<double> freqs(ds.index().allele_count(l));
    for (std::size_t j = 0; j < freqs.size(); ++j) {
      freqs[j] = static_cast<double>(ds.allele_copies()[l][j]) / copies;
    }
    beta.push_back(std::move(freqs));
  }
  return beta;
}

Responsibilities e_step(const GenotypeDataset& ds, const ModelSpec& spec,
                        const MixtureParams& params) {
  const int K = spec.k;
  Responsibilities tau(ds.n(), std::vector<double>(K));
  std::vector<double> logits(K);
  for (int i = 0; i < ds.n(); ++i) {
    const auto& row = ds.rows()[i];
    double best = kNegInf;
    for (int k = 0; k < K; ++k) {
      double logit = std::log(params.pi[k]);
      for (std::size_t si = 0; si < spec.s.size(); ++si) {
        logit += std::log(hwe_genotype_prob(row[spec.s[si]], params.alpha[k][si]));
      }
      logits[k] = logit;
      if (logit > best) best = logit;
    }
    if (best == kNegInf) {
      throw NumericError("individual " + std::to_string(i + 1) +
                         " has zero likelihood under every cluster");
    }
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += std::exp(logits[k] - best);
    for (int k = 0; k < K; ++k) tau[i][k] = std::exp(logits[k] - best) / sum;
  }
  return tau;
}

MixtureParams m_step(const GenotypeDataset& ds, const ModelSpec& spec,
                     const Responsibilities& tau, double freq_floor,
                     DegeneracyFlags* flags) {
  return m_step_weighted(ds, spec, ds.rows(), nullptr, tau, freq_floor, flags);
}

std::vector<int> map_assign(const GenotypeDataset& ds, const ModelSpec& spec,
                            const MixtureParams& params) {
  std::vector<int> assignment(ds.n(), 0);
  for (int i = 0; i < ds.n(); ++i) {
    const auto& row = ds.rows()[i];
    double best = kNegInf;
    int best_k = 0;
    for (int k = 0; k < spec.k; ++k) {
      double score = std::log(params.pi[k]);
      for (std::size_t si = 0; si < spec.s.size(); ++si) {
        score += std::log(hwe_genotype_prob(row[spec.s[si]], params.alpha[k][si]));
      }
      if (score > best) {
        best = score;
        best_k = k;
      }
    }
    assignment[i] = best_k;
  }
  return assignment;
}

void canonicalize_params(MixtureParams& params) {
  const int K = static_cast<int>(params.pi.size());
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    if (params.pi[x] != params.pi[y]) return params.pi[x] > params.pi[y];
    return params.alpha[x] < params.alpha[y];
  });
  MixtureParams sorted;
  sorted.pi.reserve(K);
  sorted.alpha.reserve(K);
  for (int k : order) {
    sorted.pi.push_back(params.pi[k]);
    sorted.alpha.push_back(std::move(params.alpha[k]));
  }
  params.pi = std::move(sorted.pi);
  params.alpha = std::move(sorted.alpha);
}

FitResult run_em(const GenotypeDataset& ds, const ModelSpec& spec,
                 const EmConfig& config) {
  config.validate();
  spec.validate(ds.num_loci());

  // All restarts coincide for a single cluster: responsibilities are
  // identically 1, so the first M-step already lands on the fixed point.
  const int restarts = spec.k == 1 ? 1 : config.restarts;
  const int threads =
      config.on_iteration ? 1 : resolve_threads(config.threads, restarts);

  Engine engine(ds, spec);
  std::vector<Engine::RestartOutcome> outcomes(restarts);
  parallel_for(restarts, threads,
               [&](int r) { outcomes[r] = engine.run_restart(r, config); });

  int best = 0;
  for (int r = 1; r < restarts; ++r) {
    if (outcomes[r].loglik > outcomes[best].loglik) best = r;
  }

  FitResult fit;
  fit.spec = spec;
  fit.theta = std::move(outcomes[best].theta);
  canonicalize_params(fit.theta);
  fit.loglik = dataset_loglik(ds, spec, fit.theta);
  fit.bic = bic_from(fit.loglik, model_dimension(spec, ds.index()), ds.n());
  fit.restarts_run = restarts;
  fit.iterations_of_best = outcomes[best].iterations;
  fit.converged = outcomes[best].converged;
  fit.near_empty_cluster = outcomes[best].flags.near_empty_cluster;
  fit.clamped_frequency = outcomes[best].flags.clamped_frequency;
  return fit;
}

}  // namespace genoclust
