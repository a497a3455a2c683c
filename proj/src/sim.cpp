#include "hmpc/sim.hpp"

#include <algorithm>
#include <cmath>

namespace hmpc {

SimTrace run(const LtiModel& plant, Controller& controller, const DemandScenario& scenario,
             const Vector& x0, int duration) {
    require_size("x0", plant.state_dim(), x0.size());
    scenario.validate(plant.demand_dim());
    if (duration < 0 || duration > scenario.duration_steps) {
        throw std::invalid_argument("duration must lie in [0, " +
                                    std::to_string(scenario.duration_steps) + "]");
    }
    const double period = plant.sample_period();
    SimTrace trace;
    trace.records.reserve(static_cast<std::size_t>(duration) + 1);
    Vector x = x0;
    Vector last_bound;
    for (int k = 0; k <= duration; ++k) {
        SimRecord rec;
        rec.step = k;
        rec.time = k * period;
        rec.state = x;
        rec.demand = accurate_preview(scenario, k, 1).front();
        if (k == duration) {
            rec.input = Vector::Zero(plant.input_dim());
            rec.state_bound = last_bound;
            trace.records.push_back(std::move(rec));
            break;
        }
        ControlStep cs;
        try {
            cs = controller.step(k, x, scenario);
        } catch (const SolverError& e) {
            rec.input = Vector::Zero(plant.input_dim());
            rec.state_bound = last_bound;
            trace.records.push_back(std::move(rec));
            trace.failed = true;
            trace.failure = "step " + std::to_string(k) + ": " + e.what();
            return trace;
        }
        require_size("controller input", plant.input_dim(), cs.input.size());
        rec.input = cs.input;
        rec.state_bound = cs.state_bound;
        rec.slacks = cs.slacks;
        rec.scheduled = cs.scheduled;
        rec.qp_iterations = cs.qp_iterations;
        last_bound = cs.state_bound;
        x = plant.step(x, rec.input, rec.demand);
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

Metrics compute_metrics(const SimTrace& trace, const MetricSpec& spec) {
    if (trace.records.empty()) {
        throw std::invalid_argument("empty trace");
    }
    if (spec.x1_reference.empty()) {
        throw std::invalid_argument("empty position reference");
    }
    Metrics m;
    double squared = 0.0;
    for (const auto& rec : trace.records) {
        const double excess = std::max(0.0, rec.state(3) - spec.x4_upper);
        m.cumulative_x4_violation += excess * spec.period;
        m.peak_x4_violation = std::max(m.peak_x4_violation, excess);
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(rec.step),
                                               spec.x1_reference.size() - 1);
        const double err = rec.state(0) - spec.x1_reference[idx];
        squared += err * err;
        if (rec.state(0) > spec.x1_upper + 1e-6 || rec.state(0) < spec.x1_lower - 1e-6) {
            ++m.x1_bound_violations;
        }
    }
    m.position_rms_error = std::sqrt(squared / static_cast<double>(trace.records.size()));
    m.energy_consumed = trace.records.front().state(2) - trace.records.back().state(2);
    return m;
}

}  // namespace hmpc
