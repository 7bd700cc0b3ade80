/* SPDX-License-Identifier: Apache-2.0
 *
 * genoclust — model-based clustering of multi-allelic genotype data with
 * built-in locus selection.
 *
 * The library groups diploid individuals into latent populations under
 * Hardy-Weinberg and linkage equilibrium, fits allele frequencies by
 * multi-restart EM, and picks both the number of clusters and the subset of
 * informative loci by maximizing BIC with a backward-stepwise search. A
 * parametric simulator generates datasets from a fully specified model for
 * validation studies.
 *
 * Conventions:
 *   - Every function returning int yields GC_OK (0) on success or a GC_ERR_*
 *     code; gc_last_error() describes the most recent failure on the calling
 *     thread.
 *   - Loci, clusters and allele labels are 1-based in this interface, file
 *     formats and reports.
 *   - Strings returned through char** are heap-allocated; release them with
 *     gc_string_free(). Handles are released with their matching *_free().
 *   - All results are deterministic functions of (inputs, options, seed).
 */
#ifndef GENOCLUST_H
#define GENOCLUST_H

#include <stdint.h>

#ifndef GENOCLUST_API
#if defined(_WIN32)
#define GENOCLUST_API
#else
#define GENOCLUST_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  GC_OK = 0,
  GC_ERR_ARGUMENT = 1, /* invalid option, handle or precondition */
  GC_ERR_IO = 2,       /* file could not be read or written */
  GC_ERR_PARSE = 3,    /* malformed dataset or scenario text */
  GC_ERR_NUMERIC = 4,  /* degenerate computation */
  GC_ERR_INTERNAL = 5
};

typedef struct gc_dataset gc_dataset;
typedef struct gc_fit gc_fit;
typedef struct gc_selection gc_selection;
typedef struct gc_scenario gc_scenario;

GENOCLUST_API const char* gc_version(void);
GENOCLUST_API const char* gc_last_error(void);
GENOCLUST_API void gc_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Genotype datasets                                                    */
/*                                                                      */
/* Text format: a header line of L locus names, then one line per       */
/* individual: identifier followed by 2L integer allele codes, two      */
/* consecutive codes per locus in header order. The sentinel -9 is      */
/* reserved for missing data and rejected.                              */
/* ------------------------------------------------------------------ */

GENOCLUST_API int gc_dataset_read(const char* path, gc_dataset** out);
GENOCLUST_API int gc_dataset_parse(const char* text, gc_dataset** out);
GENOCLUST_API int gc_dataset_write(const gc_dataset* ds, const char* path);
GENOCLUST_API int gc_dataset_format(const gc_dataset* ds, char** out);
GENOCLUST_API void gc_dataset_free(gc_dataset* ds);

GENOCLUST_API int gc_dataset_num_individuals(const gc_dataset* ds);
GENOCLUST_API int gc_dataset_num_loci(const gc_dataset* ds);
/* Distinct alleles observed at a locus, or <0 on a bad locus index. */
GENOCLUST_API int gc_dataset_allele_count(const gc_dataset* ds, int locus);

/* ------------------------------------------------------------------ */
/* EM fitting                                                           */
/* ------------------------------------------------------------------ */

typedef struct gc_em_options {
  int restarts;           /* independent EM starts, default 50 */
  double epsilon;         /* log-likelihood stop threshold, default 1e-6 */
  int max_iterations;     /* per restart, default 500 */
  double frequency_floor; /* allele-frequency lower bound, default 1e-10 */
  uint64_t seed;          /* default 1 */
  int threads;            /* 0 = hardware concurrency */
} gc_em_options;

GENOCLUST_API void gc_em_options_init(gc_em_options* opts);

/* Fits k clusters using the 1-based loci in s (s_len >= 1) as clustering
 * loci; remaining loci keep pooled frequencies. */
GENOCLUST_API int gc_fit_model(const gc_dataset* ds, int k, const int* s,
                               int s_len, const gc_em_options* opts,
                               gc_fit** out);
GENOCLUST_API void gc_fit_free(gc_fit* fit);
GENOCLUST_API double gc_fit_loglik(const gc_fit* fit);
GENOCLUST_API double gc_fit_bic(const gc_fit* fit);
GENOCLUST_API int gc_fit_converged(const gc_fit* fit);
GENOCLUST_API int gc_fit_report_json(const gc_fit* fit, char** out);
/* id,assignment,tau_1..tau_k per individual. */
GENOCLUST_API int gc_fit_assignments_csv(const gc_fit* fit, char** out);

/* ------------------------------------------------------------------ */
/* Joint choice of cluster count and clustering loci                    */
/* ------------------------------------------------------------------ */

typedef struct gc_select_options {
  gc_em_options em;
  int k_max;        /* ceiling on the cluster count, default 5 */
  int no_selection; /* nonzero: keep all loci and choose k only */
  int exhaustive;   /* nonzero: argmax over all subsets (small L only) */
} gc_select_options;

GENOCLUST_API void gc_select_options_init(gc_select_options* opts);

GENOCLUST_API int gc_select(const gc_dataset* ds,
                            const gc_select_options* opts, gc_selection** out);
GENOCLUST_API void gc_selection_free(gc_selection* sel);
GENOCLUST_API int gc_selection_k(const gc_selection* sel);
GENOCLUST_API int gc_selection_num_loci(const gc_selection* sel);
/* Writes up to capacity selected loci (1-based) and returns the count. */
GENOCLUST_API int gc_selection_loci(const gc_selection* sel, int* out,
                                    int capacity);
GENOCLUST_API double gc_selection_bic(const gc_selection* sel);
GENOCLUST_API int gc_selection_report_json(const gc_selection* sel, char** out);
GENOCLUST_API int gc_selection_trace_json(const gc_selection* sel, char** out);
GENOCLUST_API int gc_selection_assignments_csv(const gc_selection* sel,
                                               char** out);

/* ------------------------------------------------------------------ */
/* Parametric simulation                                                */
/* ------------------------------------------------------------------ */

GENOCLUST_API int gc_scenario_read(const char* path, gc_scenario** out);
GENOCLUST_API int gc_scenario_parse(const char* text, gc_scenario** out);
GENOCLUST_API void gc_scenario_free(gc_scenario* sc);
GENOCLUST_API int gc_scenario_num_individuals(const gc_scenario* sc);
GENOCLUST_API int gc_scenario_set_num_individuals(gc_scenario* sc, int n);
GENOCLUST_API int gc_scenario_replicates(const gc_scenario* sc);
GENOCLUST_API uint64_t gc_scenario_seed(const gc_scenario* sc);
GENOCLUST_API int gc_scenario_populations(const gc_scenario* sc);
GENOCLUST_API int gc_scenario_clustering_loci(const gc_scenario* sc, int* out,
                                              int capacity);
GENOCLUST_API int gc_scenario_json(const gc_scenario* sc, char** out);

/* Draws one replicate dataset. When z_out is non-NULL it receives the
 * generating cluster (1-based) of each individual; z_capacity must be at
 * least the scenario's n. truth_json (optional) receives the generating
 * parameters and cluster labels as JSON. */
GENOCLUST_API int gc_simulate(const gc_scenario* sc, uint64_t seed,
                              int replicate, gc_dataset** out_ds, int* z_out,
                              int z_capacity, char** truth_json);

/* Misassignment percentage between two labelings of the same n individuals,
 * minimized over cluster label matchings. */
GENOCLUST_API int gc_score_misassignment(const int* truth, const int* predicted,
                                         int n, double* out_percent);

#ifdef __cplusplus
}
#endif

#endif /* GENOCLUST_H */
