// SPDX-License-Identifier: Apache-2.0
#include "genoclust.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "report.hpp"

namespace {

using namespace genoclust;

thread_local std::string g_last_error;

int fail(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Maps library exceptions onto status codes; every entry point funnels here.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    return fail(GC_ERR_PARSE, e.what());
  } catch (const NumericError& e) {
    return fail(GC_ERR_NUMERIC, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(GC_ERR_ARGUMENT, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(GC_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(GC_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::ios_base::failure(std::string("cannot open '") + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const char* path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::ios_base::failure(std::string("cannot write '") + path + "'");
  }
  out << content;
  if (!out) {
    throw std::ios_base::failure(std::string("write failed for '") + path + "'");
  }
}

EmConfig to_config(const gc_em_options& opts) {
  EmConfig cfg;
  cfg.restarts = opts.restarts;
  cfg.epsilon = opts.epsilon;
  cfg.max_iterations = opts.max_iterations;
  cfg.freq_floor = opts.frequency_floor;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  return cfg;
}

}  // namespace

struct gc_dataset {
  genoclust::GenotypeDataset ds;
};

struct gc_fit {
  genoclust::FitResult fit;
  std::string report;
  std::string assignments;
};

struct gc_selection {
  genoclust::SelectionResult result;
  std::string report;
  std::string trace;
  std::string assignments;
};

struct gc_scenario {
  genoclust::SimScenario sc;
};

extern "C" {

const char* gc_version(void) { return "1.0.0"; }

const char* gc_last_error(void) { return g_last_error.c_str(); }

void gc_string_free(char* s) { delete[] s; }

int gc_dataset_read(const char* path, gc_dataset** out) {
  return guarded([&]() -> int {
    if (!path || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    const std::string text = read_file(path);
    auto handle = new gc_dataset{parse_genotypes(text)};
    *out = handle;
    return GC_OK;
  });
}

int gc_dataset_parse(const char* text, gc_dataset** out) {
  return guarded([&]() -> int {
    if (!text || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = new gc_dataset{parse_genotypes(std::string(text))};
    return GC_OK;
  });
}

int gc_dataset_write(const gc_dataset* ds, const char* path) {
  return guarded([&]() -> int {
    if (!ds || !path) return fail(GC_ERR_ARGUMENT, "null argument");
    write_file(path, serialize_genotypes(ds->ds));
    return GC_OK;
  });
}

int gc_dataset_format(const gc_dataset* ds, char** out) {
  return guarded([&]() -> int {
    if (!ds || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = copy_string(serialize_genotypes(ds->ds));
    return GC_OK;
  });
}

void gc_dataset_free(gc_dataset* ds) { delete ds; }

int gc_dataset_num_individuals(const gc_dataset* ds) {
  return ds ? ds->ds.n() : -1;
}

int gc_dataset_num_loci(const gc_dataset* ds) {
  return ds ? ds->ds.num_loci() : -1;
}

int gc_dataset_allele_count(const gc_dataset* ds, int locus) {
  if (!ds || locus < 1 || locus > ds->ds.num_loci()) return -1;
  return ds->ds.index().allele_count(locus - 1);
}

void gc_em_options_init(gc_em_options* opts) {
  if (!opts) return;
  const EmConfig defaults;
  opts->restarts = defaults.restarts;
  opts->epsilon = defaults.epsilon;
  opts->max_iterations = defaults.max_iterations;
  opts->frequency_floor = defaults.freq_floor;
  opts->seed = defaults.seed;
  opts->threads = defaults.threads;
}

int gc_fit_model(const gc_dataset* ds, int k, const int* s, int s_len,
                 const gc_em_options* opts, gc_fit** out) {
  return guarded([&]() -> int {
    if (!ds || !s || !opts || !out || s_len < 1) {
      return fail(GC_ERR_ARGUMENT, "null argument or empty locus set");
    }
    ModelSpec spec;
    spec.k = k;
    for (int i = 0; i < s_len; ++i) spec.s.push_back(s[i] - 1);
    std::sort(spec.s.begin(), spec.s.end());
    const EmConfig cfg = to_config(*opts);
    auto handle = std::make_unique<gc_fit>();
    handle->fit = run_em(ds->ds, spec, cfg);
    handle->report = fit_report_json(ds->ds, handle->fit, cfg);
    handle->assignments = assignments_csv(ds->ds, spec, handle->fit.theta);
    *out = handle.release();
    return GC_OK;
  });
}

void gc_fit_free(gc_fit* fit) { delete fit; }

double gc_fit_loglik(const gc_fit* fit) { return fit ? fit->fit.loglik : 0.0; }

double gc_fit_bic(const gc_fit* fit) { return fit ? fit->fit.bic : 0.0; }

int gc_fit_converged(const gc_fit* fit) {
  return fit ? (fit->fit.converged ? 1 : 0) : -1;
}

int gc_fit_report_json(const gc_fit* fit, char** out) {
  return guarded([&]() -> int {
    if (!fit || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = copy_string(fit->report);
    return GC_OK;
  });
}

int gc_fit_assignments_csv(const gc_fit* fit, char** out) {
  return guarded([&]() -> int {
    if (!fit || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = copy_string(fit->assignments);
    return GC_OK;
  });
}

void gc_select_options_init(gc_select_options* opts) {
  if (!opts) return;
  gc_em_options_init(&opts->em);
  opts->k_max = 5;
  opts->no_selection = 0;
  opts->exhaustive = 0;
}

int gc_select(const gc_dataset* ds, const gc_select_options* opts,
              gc_selection** out) {
  return guarded([&]() -> int {
    if (!ds || !opts || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    SelectionConfig config;
    config.em = to_config(opts->em);
    config.k_ceiling = opts->k_max;
    config.no_selection = opts->no_selection != 0;
    config.exhaustive = opts->exhaustive != 0;
    auto handle = std::make_unique<gc_selection>();
    handle->result = select_model(ds->ds, config);
    handle->report = selection_report_json(ds->ds, handle->result, config);
    handle->trace = selection_trace_json(handle->result);
    handle->assignments =
        assignments_csv(ds->ds, handle->result.best.spec, handle->result.best.theta);
    *out = handle.release();
    return GC_OK;
  });
}

void gc_selection_free(gc_selection* sel) { delete sel; }

int gc_selection_k(const gc_selection* sel) {
  return sel ? sel->result.k_hat : -1;
}

int gc_selection_num_loci(const gc_selection* sel) {
  return sel ? static_cast<int>(sel->result.s_hat.size()) : -1;
}

int gc_selection_loci(const gc_selection* sel, int* out, int capacity) {
  if (!sel || !out) return -1;
  const int count = static_cast<int>(sel->result.s_hat.size());
  for (int i = 0; i < count && i < capacity; ++i) {
    out[i] = sel->result.s_hat[i] + 1;
  }
  return count;
}

double gc_selection_bic(const gc_selection* sel) {
  return sel ? sel->result.best.bic : 0.0;
}

int gc_selection_report_json(const gc_selection* sel, char** out) {
  return guarded([&]() -> int {
    if (!sel || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = copy_string(sel->report);
    return GC_OK;
  });
}

int gc_selection_trace_json(const gc_selection* sel, char** out) {
  return guarded([&]() -> int {
    if (!sel || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = copy_string(sel->trace);
    return GC_OK;
  });
}

int gc_selection_assignments_csv(const gc_selection* sel, char** out) {
  return guarded([&]() -> int {
    if (!sel || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = copy_string(sel->assignments);
    return GC_OK;
  });
}

int gc_scenario_read(const char* path, gc_scenario** out) {
  return guarded([&]() -> int {
    if (!path || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = new gc_scenario{parse_scenario(read_file(path))};
    return GC_OK;
  });
}

int gc_scenario_parse(const char* text, gc_scenario** out) {
  return guarded([&]() -> int {
    if (!text || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = new gc_scenario{parse_scenario(std::string(text))};
    return GC_OK;
  });
}

void gc_scenario_free(gc_scenario* sc) { delete sc; }

int gc_scenario_num_individuals(const gc_scenario* sc) {
  return sc ? sc->sc.n : -1;
}

int gc_scenario_set_num_individuals(gc_scenario* sc, int n) {
  return guarded([&]() -> int {
    if (!sc) return fail(GC_ERR_ARGUMENT, "null argument");
    if (n < 1) return fail(GC_ERR_ARGUMENT, "scenario field 'n': must be >= 1");
    sc->sc.n = n;
    return GC_OK;
  });
}

int gc_scenario_replicates(const gc_scenario* sc) {
  return sc ? sc->sc.replicates : -1;
}

uint64_t gc_scenario_seed(const gc_scenario* sc) { return sc ? sc->sc.seed : 0; }

int gc_scenario_populations(const gc_scenario* sc) { return sc ? sc->sc.k0 : -1; }

int gc_scenario_clustering_loci(const gc_scenario* sc, int* out, int capacity) {
  if (!sc || !out) return -1;
  const int count = static_cast<int>(sc->sc.s0.size());
  for (int i = 0; i < count && i < capacity; ++i) out[i] = sc->sc.s0[i] + 1;
  return count;
}

int gc_scenario_json(const gc_scenario* sc, char** out) {
  return guarded([&]() -> int {
    if (!sc || !out) return fail(GC_ERR_ARGUMENT, "null argument");
    *out = copy_string(scenario_json(sc->sc));
    return GC_OK;
  });
}

int gc_simulate(const gc_scenario* sc, uint64_t seed, int replicate,
                gc_dataset** out_ds, int* z_out, int z_capacity,
                char** truth_json_out) {
  return guarded([&]() -> int {
    if (!sc || !out_ds) return fail(GC_ERR_ARGUMENT, "null argument");
    if (replicate < 0) return fail(GC_ERR_ARGUMENT, "replicate must be >= 0");
    if (z_out && z_capacity < sc->sc.n) {
      return fail(GC_ERR_ARGUMENT, "z buffer smaller than the scenario's n");
    }
    SimResult sim = simulate_dataset(sc->sc, seed, replicate);
    if (z_out) {
      for (int i = 0; i < sc->sc.n; ++i) z_out[i] = sim.z[i] + 1;
    }
    if (truth_json_out) {
      *truth_json_out = copy_string(truth_json(sc->sc, sim.z, seed, replicate));
    }
    *out_ds = new gc_dataset{std::move(sim.data)};
    return GC_OK;
  });
}

int gc_score_misassignment(const int* truth, const int* predicted, int n,
                           double* out_percent) {
  return guarded([&]() -> int {
    if (!truth || !predicted || !out_percent || n < 1) {
      return fail(GC_ERR_ARGUMENT, "null argument or empty labeling");
    }
    *out_percent = score_recovery(std::span<const int>(truth, n),
                                  std::span<const int>(predicted, n));
    return GC_OK;
  });
}

}  // extern "C"
