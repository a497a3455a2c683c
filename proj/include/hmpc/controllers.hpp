#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmpc/model.hpp"
#include "hmpc/mpc.hpp"
#include "hmpc/preview.hpp"
#include "hmpc/qp.hpp"
#include "hmpc/types.hpp"

namespace hmpc {

/// A controller QP did not reach an optimal, certified solution.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, QpStatus status)
        : std::runtime_error(what), status_(status) {}
    [[nodiscard]] QpStatus status() const noexcept { return status_; }

private:
    QpStatus status_;
};

/// Tracking cost on the fine time axis: ||E x + F u - r(t)||^2_W, with r(t)
/// given per fine step and held at its last entry afterwards.
struct TrackingObjective {
    Matrix output_from_state;
    Matrix output_from_input;
    Matrix weight;
    Trajectory reference;
    double terminal_weight = 0.0;
};

struct ConstraintSpec {
    PolyhedralSet state_set;
    PolyhedralSet input_set;
    std::vector<int> soft_rows;
    double slack_weight = 1e6;
};

/// MPC problem over `horizon` stages of `model`, where stage j samples the
/// objective reference at fine step first_step + j * stride.
[[nodiscard]] MpcSpec make_spec(const LtiModel& model, int horizon,
                                const TrackingObjective& objective,
                                const ConstraintSpec& constraints, int first_step, int stride);

struct MpcResult {
    MpcTrajectory trajectory;
    QpSolution qp;

    [[nodiscard]] const Vector& first_input() const { return trajectory.inputs.front(); }
};

/// Solves the condensed problem; throws SolverError unless the QP is optimal.
[[nodiscard]] MpcResult solve_smpc(const MpcSpec& spec, const Vector& x0,
                                   const Trajectory& preview);

enum class TighteningSource { none, robust, passive };

[[nodiscard]] const char* to_string(TighteningSource source) noexcept;

/// Per-row amounts subtracted from the state-constraint right-hand side.
struct TighteningState {
    Vector qbar;
    TighteningSource source = TighteningSource::none;

    [[nodiscard]] static TighteningState zero(int rows);
};

/// Rows of `set` that only involve slow states.
[[nodiscard]] std::vector<bool> slow_rows(const PolyhedralSet& set,
                                          const std::vector<bool>& slow_mask);

/// Scheduling solve on the coarse model with the state set shrunk by `tightening.qbar`.
[[nodiscard]] MpcResult solve_scheduling(const MpcSpec& spec_coarse, const Vector& x0,
                                         const Trajectory& approx_preview,
                                         const TighteningState& tightening);

/// Scheduled slow-state values at coarse steps, issued at fine step `origin_step`.
struct SlowStatePlan {
    Trajectory values;
    int nu = 1;
    int origin_step = 0;
};

/// Throws std::invalid_argument if the mask selects no state or no states are given.
[[nodiscard]] SlowStatePlan extract_slow_plan(const Trajectory& coarse_states,
                                              const std::vector<bool>& slow_mask, int nu,
                                              int origin_step);

/// Fine-step references for steps k .. k+horizon-1; each plan value covers `nu`
/// consecutive fine steps starting at the plan origin, the last one is held.
[[nodiscard]] Trajectory expand_plan(const SlowStatePlan& plan, int k, int horizon);

/// Fine-rate solve with the extra cost slow_weight * ||x_slow(j+1) - slow_reference_j||^2,
/// i.e. the reference covers the predicted states 1..H_p.
[[nodiscard]] MpcResult solve_piloting(const MpcSpec& spec_fine, double slow_weight,
                                       const Vector& x0, const Trajectory& preview,
                                       const Trajectory& slow_reference);

/// Per-row maxima of the slow-row violations (P x - q)+ along the states
/// predicted from x0 under `planned_inputs` and `preview`.
[[nodiscard]] TighteningState predict_violation(const LtiModel& model, const Vector& x0,
                                                const Trajectory& planned_inputs,
                                                const Trajectory& preview,
                                                const PolyhedralSet& state_set);

/// Slow-row violations of the measured state.
[[nodiscard]] TighteningState passive_tightening(const Vector& x_measured,
                                                 const PolyhedralSet& state_set,
                                                 const std::vector<bool>& slow_mask);

/// What a controller hands to the plant at one fine step.
struct ControlStep {
    Vector input;
    bool scheduled = false;
    int qp_iterations = 0;
    /// Right-hand side of the state constraints in force at the scheduling layer.
    Vector state_bound;
    /// Slacks of the first predicted state, one per softened row.
    Vector slacks;
};

class Controller {
public:
    virtual ~Controller() = default;
    /// Fine steps must be requested in order 0, 1, 2, ...
    virtual ControlStep step(int k, const Vector& x, const DemandScenario& scenario) = 0;
};

enum class PreviewSource { actual, approximate };

struct SmpcSettings {
    LtiModel model;
    TrackingObjective objective;
    ConstraintSpec constraints;
    int horizon = 10;
    PreviewSource preview = PreviewSource::actual;
};

class SmpcController final : public Controller {
public:
    explicit SmpcController(SmpcSettings settings);
    ControlStep step(int k, const Vector& x, const DemandScenario& scenario) override;

private:
    SmpcSettings settings_;
    int next_step_ = 0;
};

struct HierarchicalSettings {
    LtiModel model;
    TrackingObjective objective;
    ConstraintSpec constraints;
    int nu = 5;
    int scheduling_horizon = 20;
    int piloting_horizon = 20;
    double slow_weight = 10.0;
    TighteningSource tightening = TighteningSource::none;
};

/// Two-layer controller: a coarse scheduling MPC on the approximate demand every
/// `nu` steps and a fine piloting MPC on the accurate demand every step.
class HierarchicalController final : public Controller {
public:
    explicit HierarchicalController(HierarchicalSettings settings);
    ControlStep step(int k, const Vector& x, const DemandScenario& scenario) override;

    /// Tightening the next scheduling solve would use.
    [[nodiscard]] const TighteningState& pending_tightening() const noexcept {
        return pending_;
    }

private:
    HierarchicalSettings settings_;
    LtiModel coarse_model_;
    SlowStatePlan plan_;
    TighteningState pending_;
    Vector state_bound_;
    int next_step_ = 0;
};

}  // namespace hmpc
