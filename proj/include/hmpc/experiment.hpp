#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hmpc/config.hpp"
#include "hmpc/controllers.hpp"
#include "hmpc/sim.hpp"
#include "hmpc/trace_io.hpp"

namespace hmpc {

/// Case-study stage cost with outputs (u1, u2, x1, u3), weights
/// (lambda1, lambda2, lambda3, lambda_u3) and reference (0, 0, x1_ref(k), 0).
[[nodiscard]] TrackingObjective case_study_objective(const ExperimentConfig& config);

[[nodiscard]] ConstraintSpec case_study_constraints(const ExperimentConfig& config);

[[nodiscard]] MetricSpec case_study_metric_spec(const ExperimentConfig& config);

/// smpc | hmpc | hmpc-passive | hmpc-robust. Throws std::invalid_argument otherwise.
/// S-MPC uses the accurate preview over its whole horizon.
[[nodiscard]] std::unique_ptr<Controller> make_controller(const ExperimentConfig& config,
                                                          const std::string& variant);

struct VariantRun {
    std::string variant;
    SimTrace trace;
    Metrics metrics;
    double seconds = 0.0;
};

[[nodiscard]] VariantRun run_variant(const ExperimentConfig& config, const std::string& variant);

[[nodiscard]] TraceTable tabulate(const ExperimentConfig& config, const SimTrace& trace);

/// Consolidated metrics of all runs, as a JSON document.
[[nodiscard]] std::string metrics_json(const ExperimentConfig& config,
                                       const std::vector<VariantRun>& runs);

/// Fixed-width variant x metric table.
[[nodiscard]] std::string comparison_table(const std::vector<VariantRun>& runs);

}  // namespace hmpc
