#include "hmpc/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace hmpc {

TrackingObjective case_study_objective(const ExperimentConfig& config) {
    TrackingObjective obj;
    obj.output_from_state = Matrix::Zero(4, 4);
    obj.output_from_state(2, 0) = 1.0;
    obj.output_from_input = Matrix::Zero(4, 3);
    obj.output_from_input(0, 0) = 1.0;
    obj.output_from_input(1, 1) = 1.0;
    obj.output_from_input(3, 2) = 1.0;
    obj.weight = Eigen::Vector4d(config.lambda1, config.lambda2, config.lambda3, config.lambda_u3)
                     .asDiagonal();
    for (double r : config.x1_reference(config.duration + 1)) {
        obj.reference.push_back(Eigen::Vector4d(0.0, 0.0, r, 0.0));
    }
    return obj;
}

ConstraintSpec case_study_constraints(const ExperimentConfig& config) {
    return {config.state_set(), config.input_set(), config.soft_rows, config.slack_weight};
}

MetricSpec case_study_metric_spec(const ExperimentConfig& config) {
    MetricSpec spec;
    spec.x4_upper = config.x_upper(3);
    spec.x1_lower = config.x_lower(0);
    spec.x1_upper = config.x_upper(0);
    spec.x1_reference = config.x1_reference(config.duration + 1);
    spec.period = config.sample_period;
    return spec;
}

std::unique_ptr<Controller> make_controller(const ExperimentConfig& config,
                                            const std::string& variant) {
    if (variant == "smpc") {
        return std::make_unique<SmpcController>(
            SmpcSettings{config.model(), case_study_objective(config),
                         case_study_constraints(config), config.smpc_horizon,
                         PreviewSource::actual});
    }
    TighteningSource source;
    if (variant == "hmpc") {
        source = TighteningSource::none;
    } else if (variant == "hmpc-passive") {
        source = TighteningSource::passive;
    } else if (variant == "hmpc-robust") {
        source = TighteningSource::robust;
    } else {
        throw std::invalid_argument("unknown controller '" + variant + "'");
    }
    return std::make_unique<HierarchicalController>(HierarchicalSettings{
        config.model(), case_study_objective(config), case_study_constraints(config), config.nu,
        config.scheduling_horizon, config.piloting_horizon, config.lambda4, source});
}

VariantRun run_variant(const ExperimentConfig& config, const std::string& variant) {
    auto controller = make_controller(config, variant);
    VariantRun out;
    out.variant = variant;
    const auto start = std::chrono::steady_clock::now();
    out.trace = run(config.model(), *controller, config.scenario(), config.x0, config.duration);
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.metrics = compute_metrics(out.trace, case_study_metric_spec(config));
    return out;
}

TraceTable tabulate(const ExperimentConfig& config, const SimTrace& trace) {
    return tabulate(trace, config.state_set(), config.soft_rows);
}

std::string metrics_json(const ExperimentConfig& config, const std::vector<VariantRun>& runs) {
    nlohmann::ordered_json doc;
    doc["smpc_horizon"] = config.smpc_horizon;
    doc["scheduling_horizon"] = config.scheduling_horizon;
    doc["piloting_horizon"] = config.piloting_horizon;
    doc["nu"] = config.nu;
    doc["duration"] = config.duration;
    auto& variants = doc["variants"];
    variants = nlohmann::ordered_json::object();
    for (const auto& r : runs) {
        nlohmann::ordered_json v;
        v["status"] = r.trace.failed ? "failed" : "ok";
        if (r.trace.failed) {
            v["failure"] = r.trace.failure;
        }
        v["cumulative_x4_violation"] = r.metrics.cumulative_x4_violation;
        v["peak_x4_violation"] = r.metrics.peak_x4_violation;
        v["position_rms_error"] = r.metrics.position_rms_error;
        v["energy_consumed"] = r.metrics.energy_consumed;
        v["x1_bound_violations"] = r.metrics.x1_bound_violations;
        v["steps"] = static_cast<int>(r.trace.records.size()) - 1;
        v["runtime_s"] = r.seconds;
        variants[r.variant] = std::move(v);
    }
    return doc.dump(2) + "\n";
}

std::string comparison_table(const std::vector<VariantRun>& runs) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %12s %10s %10s %10s %6s %8s %s\n", "variant",
                  "x4_viol", "x4_peak", "pos_rms", "energy", "x1_bad", "time_s", "status");
    out += line;
    for (const auto& r : runs) {
        std::snprintf(line, sizeof line, "%-14s %12.4e %10.4f %10.4f %10.4f %6d %8.2f %s\n",
                      r.variant.c_str(), r.metrics.cumulative_x4_violation,
                      r.metrics.peak_x4_violation, r.metrics.position_rms_error,
                      r.metrics.energy_consumed, r.metrics.x1_bound_violations, r.seconds,
                      r.trace.failed ? "FAILED" : "ok");
        out += line;
    }
    return out;
}

}  // namespace hmpc
