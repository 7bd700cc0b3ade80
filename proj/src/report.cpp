// SPDX-License-Identifier: Apache-2.0
#include "report.hpp"

#include <charconv>

#include <json.hpp>

namespace genoclust {

using nlohmann::json;

namespace {

json loci_1based(const std::vector<int>& s) {
  json arr = json::array();
  for (int l : s) arr.push_back(l + 1);
  return arr;
}

json dataset_json(const GenotypeDataset& ds) {
  json codes = json::array();
  json alleles = json::array();
  for (int l = 0; l < ds.num_loci(); ++l) {
    codes.push_back(ds.index().codes[l]);
    alleles.push_back(ds.index().allele_count(l));
  }
  return json{{"n", ds.n()},
              {"loci", ds.locus_names()},
              {"alleles", alleles},
              {"allele_codes", codes}};
}

json theta_json(const ModelSpec& spec, const MixtureParams& params,
                int num_loci) {
  json alpha = json::array();
  for (int k = 0; k < spec.k; ++k) {
    json rows = json::array();
    for (std::size_t si = 0; si < spec.s.size(); ++si) {
      rows.push_back(json{{"locus", spec.s[si] + 1},
                          {"freq", params.alpha[k][si]}});
    }
    alpha.push_back(json{{"cluster", k + 1}, {"loci", rows}});
  }
  json beta = json::array();
  const std::vector<int> comp = spec.complement(num_loci);
  for (std::size_t ci = 0; ci < comp.size(); ++ci) {
    beta.push_back(json{{"locus", comp[ci] + 1}, {"freq", params.beta[ci]}});
  }
  return json{{"pi", params.pi}, {"alpha", alpha}, {"beta", beta}};
}

json em_json(const EmConfig& em) {
  return json{{"restarts", em.restarts},
              {"epsilon", em.epsilon},
              {"max_iterations", em.max_iterations},
              {"frequency_floor", em.freq_floor},
              {"seed", em.seed},
              {"stop_rule", em.stop_rule == StopRule::observed_loglik
                                ? "observed_loglik"
                                : "expected_complete_loglik"}};
}

json fit_json(const GenotypeDataset& ds, const FitResult& fit) {
  return json{{"k", fit.spec.k},
              {"s", loci_1based(fit.spec.s)},
              {"loglik", fit.loglik},
              {"bic", fit.bic},
              {"dimension", model_dimension(fit.spec, ds.index())},
              {"converged", fit.converged},
              {"restarts_run", fit.restarts_run},
              {"iterations_of_best", fit.iterations_of_best},
              {"near_empty_cluster", fit.near_empty_cluster},
              {"clamped_frequency", fit.clamped_frequency},
              {"theta", theta_json(fit.spec, fit.theta, ds.num_loci())}};
}

const char* step_kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::exclusion_proposal: return "exclusion-proposal";
    case StepKind::exclusion_accepted: return "exclusion-accepted";
    case StepKind::exclusion_rejected: return "exclusion-rejected";
    case StepKind::inclusion_proposal: return "inclusion-proposal";
    case StepKind::inclusion_accepted: return "inclusion-accepted";
    case StepKind::inclusion_rejected: return "inclusion-rejected";
    case StepKind::stop: return "stop";
  }
  return "unknown";
}

const char* stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::none: return "none";
    case StopReason::s_complement_empty: return "s-complement-empty";
    case StopReason::inclusion_cycle: return "inclusion-cycle";
    case StopReason::no_change: return "no-change";
    case StopReason::pass_limit: return "pass-limit";
  }
  return "unknown";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fit_report_json(const GenotypeDataset& ds, const FitResult& fit,
                            const EmConfig& em) {
  json report{{"command", "fit"},
              {"dataset", dataset_json(ds)},
              {"best", fit_json(ds, fit)},
              {"em", em_json(em)}};
  return report.dump(2) + "\n";
}

std::string selection_report_json(const GenotypeDataset& ds,
                                  const SelectionResult& sel,
                                  const SelectionConfig& config) {
  json per_k = json::array();
  for (const auto& row : sel.per_k) {
    per_k.push_back(json{{"k", row.k},
                         {"s", loci_1based(row.best_s)},
                         {"final_s", loci_1based(row.final_s)},
                         {"loglik", row.loglik},
                         {"bic", row.bic},
                         {"s_applicable", row.k > 1},
                         {"stop", stop_reason_name(row.stop)}});
  }
  json report{{"command", "select"},
              {"dataset", dataset_json(ds)},
              {"selection",
               json{{"enabled", sel.selection_enabled},
                    {"k_max", sel.k_max_used},
                    {"k_cap", sel.k_cap},
                    {"k_hat", sel.k_hat},
                    {"s_hat", loci_1based(sel.s_hat)},
                    {"s_applicable", sel.s_applicable},
                    {"models_fitted", sel.models_fitted}}},
              {"best", fit_json(ds, sel.best)},
              {"per_k", per_k},
              {"em", em_json(config.em)}};
  return report.dump(2) + "\n";
}

std::string selection_trace_json(const SelectionResult& sel) {
  json steps = json::array();
  for (const auto& step : sel.trace) {
    json j{{"kind", step_kind_name(step.kind)},
           {"k", step.k},
           {"s", loci_1based(step.s)},
           {"bic_current", step.bic_current}};
    if (step.candidate >= 0) {
      j["candidate"] = step.candidate + 1;
      j["bic_candidate"] = step.bic_candidate;
    }
    if (step.kind == StepKind::stop) {
      j["reason"] = stop_reason_name(step.stop);
    }
    steps.push_back(std::move(j));
  }
  json table = json::array();
  for (const auto& row : sel.per_k) {
    table.push_back(json{{"k", row.k},
                         {"s", loci_1based(row.best_s)},
                         {"bic", row.bic}});
  }
  json report{{"steps", steps}, {"bic_table", table}};
  return report.dump(2) + "\n";
}

std::string assignments_csv(const GenotypeDataset& ds, const ModelSpec& spec,
                            const MixtureParams& params) {
  const Responsibilities tau = e_step(ds, spec, params);
  const std::vector<int> z = map_assign(ds, spec, params);
  std::string out = "id,assignment";
  for (int k = 1; k <= spec.k; ++k) out += ",tau_" + std::to_string(k);
  out += '\n';
  for (int i = 0; i < ds.n(); ++i) {
    out += ds.ids()[i];
    out += ',';
    out += std::to_string(z[i] + 1);
    for (int k = 0; k < spec.k; ++k) {
      out += ',';
      out += format_double(tau[i][k]);
    }
    out += '\n';
  }
  return out;
}

std::string scenario_json(const SimScenario& sc) {
  json freq = json::array();
  for (int k = 0; k < sc.k0; ++k) {
    json rows = json::array();
    for (std::size_t si = 0; si < sc.s0.size(); ++si) {
      rows.push_back(json{{"locus", sc.s0[si] + 1}, {"freq", sc.alpha[k][si]}});
    }
    freq.push_back(json{{"population", k + 1}, {"loci", rows}});
  }
  json noise = json::array();
  const std::vector<int> comp = sc.complement();
  for (std::size_t ci = 0; ci < comp.size(); ++ci) {
    noise.push_back(json{{"locus", comp[ci] + 1}, {"freq", sc.beta[ci]}});
  }
  return json{{"n", sc.n},
              {"loci", sc.num_loci},
              {"alleles", sc.allele_counts},
              {"populations", sc.k0},
              {"proportions", sc.pi},
              {"clustering_loci", loci_1based(sc.s0)},
              {"replicates", sc.replicates},
              {"seed", sc.seed},
              {"freq", freq},
              {"noise", noise}}
      .dump();
}

std::string truth_json(const SimScenario& sc, const std::vector<int>& z,
                       std::uint64_t seed, int replicate) {
  json zs = json::array();
  for (int v : z) zs.push_back(v + 1);
  json report{{"seed", seed},
              {"replicate", replicate},
              {"z", zs},
              {"scenario", json::parse(scenario_json(sc))}};
  return report.dump(2) + "\n";
}

}  // namespace genoclust
