// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "selection.hpp"
#include "simulate.hpp"

namespace genoclust {

// Shortest round-trip decimal text for a double; deterministic across runs.
std::string format_double(double v);

std::string fit_report_json(const GenotypeDataset& ds, const FitResult& fit,
                            const EmConfig& em);
std::string selection_report_json(const GenotypeDataset& ds,
                                  const SelectionResult& sel,
                                  const SelectionConfig& config);
std::string selection_trace_json(const SelectionResult& sel);

// CSV of per-individual MAP assignment and responsibilities:
// id,assignment,tau_1..tau_K (assignment and loci 1-based).
std::string assignments_csv(const GenotypeDataset& ds, const ModelSpec& spec,
                            const MixtureParams& params);

std::string scenario_json(const SimScenario& sc);
// Generating truth for one simulated replicate: seed, replicate index,
// per-individual source cluster (1-based) and the scenario echo.
std::string truth_json(const SimScenario& sc, const std::vector<int>& z,
                       std::uint64_t seed, int replicate);

}  // namespace genoclust
