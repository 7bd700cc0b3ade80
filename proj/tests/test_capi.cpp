// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "genoclust.h"

using nlohmann::json;

namespace {

constexpr const char* kDataText =
    "L1 L2\n"
    "a 1 1 2 2\n"
    "b 1 2 1 2\n"
    "c 2 2 1 1\n"
    "d 1 1 1 2\n"
    "e 1 2 2 2\n"
    "f 2 2 1 1\n";

constexpr const char* kScenarioText = R"(n = 60
loci = 2
alleles = 2 2
populations = 2
proportions = 0.5 0.5
clustering_loci = 1
replicates = 3
seed = 7
freq 1 1 = 0.9 0.1
freq 1 2 = 0.1 0.9
noise 2 = 0.5 0.5
)";

std::string take(char* s) {
  std::string out(s);
  gc_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and null handling") {
  CHECK(std::string(gc_version()) == "1.0.0");
  CHECK(gc_dataset_parse(nullptr, nullptr) == GC_ERR_ARGUMENT);
  CHECK(std::string(gc_last_error()).size() > 0);
  CHECK(gc_dataset_num_individuals(nullptr) == -1);
}

TEST_CASE("dataset lifecycle through the C interface") {
  gc_dataset* ds = nullptr;
  REQUIRE(gc_dataset_parse(kDataText, &ds) == GC_OK);
  CHECK(gc_dataset_num_individuals(ds) == 6);
  CHECK(gc_dataset_num_loci(ds) == 2);
  CHECK(gc_dataset_allele_count(ds, 1) == 2);
  CHECK(gc_dataset_allele_count(ds, 3) == -1);

  char* text = nullptr;
  REQUIRE(gc_dataset_format(ds, &text) == GC_OK);
  gc_dataset* again = nullptr;
  REQUIRE(gc_dataset_parse(text, &again) == GC_OK);
  char* text2 = nullptr;
  REQUIRE(gc_dataset_format(again, &text2) == GC_OK);
  CHECK(take(text) == take(text2));
  gc_dataset_free(again);
  gc_dataset_free(ds);
}

TEST_CASE("parse errors carry the reported location") {
  gc_dataset* ds = nullptr;
  CHECK(gc_dataset_parse("L1\nx 1 -9\n", &ds) == GC_ERR_PARSE);
  CHECK(std::string(gc_last_error()).find("line 2") != std::string::npos);
  CHECK(gc_dataset_read("/nonexistent/path.txt", &ds) == GC_ERR_IO);
}

TEST_CASE("fit through the C interface") {
  gc_dataset* ds = nullptr;
  REQUIRE(gc_dataset_parse(kDataText, &ds) == GC_OK);

  gc_em_options em;
  gc_em_options_init(&em);
  CHECK(em.restarts == 50);
  CHECK(em.epsilon == 1e-6);
  CHECK(em.max_iterations == 500);
  em.restarts = 10;

  const int loci[2] = {1, 2};
  gc_fit* fit = nullptr;
  REQUIRE(gc_fit_model(ds, 2, loci, 2, &em, &fit) == GC_OK);
  CHECK(gc_fit_loglik(fit) < 0.0);
  CHECK(gc_fit_bic(fit) < 0.0);
  CHECK(gc_fit_converged(fit) == 1);

  char* report = nullptr;
  REQUIRE(gc_fit_report_json(fit, &report) == GC_OK);
  const json parsed = json::parse(take(report));
  CHECK(parsed["best"]["k"] == 2);
  CHECK(parsed["best"]["theta"]["pi"].size() == 2);

  char* csv = nullptr;
  REQUIRE(gc_fit_assignments_csv(fit, &csv) == GC_OK);
  const std::string assignments = take(csv);
  CHECK(assignments.rfind("id,assignment,tau_1,tau_2\n", 0) == 0);

  // Invalid cluster count surfaces as an argument error.
  gc_fit* bad = nullptr;
  CHECK(gc_fit_model(ds, 0, loci, 2, &em, &bad) == GC_ERR_ARGUMENT);

  gc_fit_free(fit);
  gc_dataset_free(ds);
}

TEST_CASE("selection through the C interface") {
  gc_scenario* sc = nullptr;
  REQUIRE(gc_scenario_parse(kScenarioText, &sc) == GC_OK);
  gc_dataset* ds = nullptr;
  REQUIRE(gc_simulate(sc, 7, 0, &ds, nullptr, 0, nullptr) == GC_OK);

  gc_select_options opts;
  gc_select_options_init(&opts);
  CHECK(opts.k_max == 5);
  opts.em.restarts = 10;
  opts.k_max = 3;

  gc_selection* sel = nullptr;
  REQUIRE(gc_select(ds, &opts, &sel) == GC_OK);
  const int k_hat = gc_selection_k(sel);
  CHECK(k_hat >= 1);
  const int count = gc_selection_num_loci(sel);
  REQUIRE(count >= 1);
  std::vector<int> loci(count);
  CHECK(gc_selection_loci(sel, loci.data(), count) == count);
  for (int l : loci) CHECK((l >= 1 && l <= 2));

  char* report = nullptr;
  REQUIRE(gc_selection_report_json(sel, &report) == GC_OK);
  const json parsed = json::parse(take(report));
  CHECK(parsed["selection"]["k_hat"] == k_hat);
  CHECK(parsed["per_k"].size() == 3);

  char* trace = nullptr;
  REQUIRE(gc_selection_trace_json(sel, &trace) == GC_OK);
  const json tr = json::parse(take(trace));
  CHECK(tr.contains("steps"));
  CHECK(tr["bic_table"].size() == 3);

  char* csv = nullptr;
  REQUIRE(gc_selection_assignments_csv(sel, &csv) == GC_OK);
  CHECK(take(csv).rfind("id,assignment", 0) == 0);

  gc_selection_free(sel);
  gc_dataset_free(ds);
  gc_scenario_free(sc);
}

TEST_CASE("simulation through the C interface") {
  gc_scenario* sc = nullptr;
  REQUIRE(gc_scenario_parse(kScenarioText, &sc) == GC_OK);
  CHECK(gc_scenario_num_individuals(sc) == 60);
  CHECK(gc_scenario_replicates(sc) == 3);
  CHECK(gc_scenario_seed(sc) == 7);
  CHECK(gc_scenario_populations(sc) == 2);
  int s0[4] = {0, 0, 0, 0};
  CHECK(gc_scenario_clustering_loci(sc, s0, 4) == 1);
  CHECK(s0[0] == 1);

  REQUIRE(gc_scenario_set_num_individuals(sc, 80) == GC_OK);
  CHECK(gc_scenario_num_individuals(sc) == 80);
  CHECK(gc_scenario_set_num_individuals(sc, 0) == GC_ERR_ARGUMENT);

  std::vector<int> z(80);
  gc_dataset* ds = nullptr;
  char* truth = nullptr;
  REQUIRE(gc_simulate(sc, 7, 1, &ds, z.data(), 80, &truth) == GC_OK);
  CHECK(gc_dataset_num_individuals(ds) == 80);
  for (int v : z) CHECK((v == 1 || v == 2));

  const json tr = json::parse(take(truth));
  CHECK(tr["replicate"] == 1);
  CHECK(tr["z"].size() == 80);
  CHECK(tr["scenario"]["populations"] == 2);

  // Undersized z buffer is rejected.
  gc_dataset* ds2 = nullptr;
  CHECK(gc_simulate(sc, 7, 1, &ds2, z.data(), 10, nullptr) == GC_ERR_ARGUMENT);

  char* sjson = nullptr;
  REQUIRE(gc_scenario_json(sc, &sjson) == GC_OK);
  CHECK(json::parse(take(sjson))["loci"] == 2);

  gc_dataset_free(ds);
  gc_scenario_free(sc);
}

TEST_CASE("misassignment through the C interface") {
  const int truth[4] = {1, 1, 2, 2};
  const int pred[4] = {2, 2, 1, 1};
  double out = -1.0;
  REQUIRE(gc_score_misassignment(truth, pred, 4, &out) == GC_OK);
  CHECK(out == 0.0);
  CHECK(gc_score_misassignment(nullptr, pred, 4, &out) == GC_ERR_ARGUMENT);
}
