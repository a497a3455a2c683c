#pragma once

#include <string>
#include <vector>

#include "hmpc/controllers.hpp"
#include "hmpc/model.hpp"
#include "hmpc/preview.hpp"
#include "hmpc/types.hpp"

namespace hmpc {

struct SimRecord {
    int step = 0;
    double time = 0.0;
    Vector state;
    Vector input;
    Vector demand;  // actual demand applied to the plant
    Vector state_bound;
    Vector slacks;
    bool scheduled = false;
    int qp_iterations = 0;
};

/// Records for fine steps 0..duration. The last record carries the final
/// state only: its input and slacks are zero and no solve happened.
struct SimTrace {
    std::vector<SimRecord> records;
    bool failed = false;
    std::string failure;
};

/// Closed loop of `controller` and `plant` under the actual demand. A solver
/// failure stops the run; the trace then ends at the state where it occurred.
[[nodiscard]] SimTrace run(const LtiModel& plant, Controller& controller,
                           const DemandScenario& scenario, const Vector& x0, int duration);

/// Quantities that the metrics refer to, in vehicle state layout
/// (x1 position, x3 stored energy, x4 thermal index).
struct MetricSpec {
    double x4_upper = 30.0;
    double x1_lower = -1.0;
    double x1_upper = 100.0;
    std::vector<double> x1_reference;  // per fine step, last value held
    double period = 1.0;
};

struct Metrics {
    double cumulative_x4_violation = 0.0;  // sum of max(0, x4 - x4_upper) * T
    double peak_x4_violation = 0.0;
    double position_rms_error = 0.0;
    double energy_consumed = 0.0;  // x3(0) - x3(end)
    int x1_bound_violations = 0;   // records with x1 outside its bounds by more than 1e-6
};

/// Throws std::invalid_argument on an empty trace or an empty reference.
[[nodiscard]] Metrics compute_metrics(const SimTrace& trace, const MetricSpec& spec);

}  // namespace hmpc
