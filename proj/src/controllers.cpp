#include "hmpc/controllers.hpp"

#include <algorithm>
#include <string>

namespace hmpc {

namespace {

const Vector& sample(const Trajectory& series, long index) {
    const long last = static_cast<long>(series.size()) - 1;
    return series[static_cast<std::size_t>(std::clamp(index, 0L, last))];
}

void check_clock(int& next, int k) {
    if (k != next) {
        throw std::logic_error("controller expected step " + std::to_string(next) + ", got " +
                               std::to_string(k));
    }
    ++next;
}

Vector first_slacks(const MpcTrajectory& traj, int soft_rows) {
    return traj.slacks.empty() ? Vector::Zero(soft_rows) : traj.slacks.front();
}

}  // namespace

MpcSpec make_spec(const LtiModel& model, int horizon, const TrackingObjective& objective,
                  const ConstraintSpec& constraints, int first_step, int stride) {
    if (objective.reference.empty()) {
        throw std::invalid_argument("objective has no reference");
    }
    QuadraticTrackingCost cost{objective.output_from_state, objective.output_from_input,
                               objective.weight, {}, objective.terminal_weight};
    for (int j = 0; j <= horizon; ++j) {
        cost.reference.push_back(
            sample(objective.reference, static_cast<long>(first_step) + static_cast<long>(j) * stride));
    }
    return MpcSpec{model,
                   horizon,
                   std::move(cost),
                   constraints.state_set,
                   constraints.input_set,
                   constraints.soft_rows,
                   constraints.slack_weight};
}

MpcResult solve_smpc(const MpcSpec& spec, const Vector& x0, const Trajectory& preview) {
    const CondensedMpc condensed = condense(spec, x0, preview);
    QpSolution sol = solve(condensed.qp());
    if (!sol.optimal()) {
        throw SolverError(std::string("MPC QP not solved: ") + to_string(sol.status) +
                              (sol.diagnostic.empty() ? "" : " (" + sol.diagnostic + ")"),
                          sol.status);
    }
    MpcResult out{condensed.decode(sol.z), std::move(sol)};
    return out;
}

const char* to_string(TighteningSource source) noexcept {
    switch (source) {
        case TighteningSource::none:
            return "none";
        case TighteningSource::robust:
            return "robust";
        case TighteningSource::passive:
            return "passive";
    }
    return "unknown";
}

TighteningState TighteningState::zero(int rows) {
    return TighteningState{Vector::Zero(rows), TighteningSource::none};
}

std::vector<bool> slow_rows(const PolyhedralSet& set, const std::vector<bool>& slow_mask) {
    require_size("slow_mask", set.dim(), static_cast<long>(slow_mask.size()));
    std::vector<bool> out(static_cast<std::size_t>(set.rows()), false);
    for (int r = 0; r < set.rows(); ++r) {
        bool any = false;
        bool only_slow = true;
        for (int c = 0; c < set.dim(); ++c) {
            if (set.p()(r, c) != 0.0) {
                any = true;
                only_slow = only_slow && slow_mask[static_cast<std::size_t>(c)];
            }
        }
        out[static_cast<std::size_t>(r)] = any && only_slow;
    }
    return out;
}

MpcResult solve_scheduling(const MpcSpec& spec_coarse, const Vector& x0,
                           const Trajectory& approx_preview, const TighteningState& tightening) {
    require_size("qbar", spec_coarse.state_set.rows(), tightening.qbar.size());
    if ((tightening.qbar.array() < 0.0).any()) {
        throw std::invalid_argument("tightening amounts must be nonnegative");
    }
    MpcSpec spec = spec_coarse;
    spec.state_set = spec_coarse.state_set.tightened(tightening.qbar);
    return solve_smpc(spec, x0, approx_preview);
}

SlowStatePlan extract_slow_plan(const Trajectory& coarse_states,
                                const std::vector<bool>& slow_mask, int nu, int origin_step) {
    if (coarse_states.empty()) {
        throw std::invalid_argument("no scheduled states");
    }
    if (nu < 1) {
        throw std::invalid_argument("nu must be >= 1");
    }
    std::vector<int> idx;
    for (std::size_t i = 0; i < slow_mask.size(); ++i) {
        if (slow_mask[i]) idx.push_back(static_cast<int>(i));
    }
    if (idx.empty()) {
        throw std::invalid_argument("slow mask selects no state");
    }
    SlowStatePlan plan{{}, nu, origin_step};
    for (const auto& x : coarse_states) {
        require_size("coarse state", static_cast<long>(slow_mask.size()), x.size());
        plan.values.emplace_back(x(idx));
    }
    return plan;
}

Trajectory expand_plan(const SlowStatePlan& plan, int k, int horizon) {
    if (plan.values.empty()) {
        throw std::invalid_argument("empty slow-state plan");
    }
    if (k < plan.origin_step) {
        throw std::invalid_argument("step precedes the plan origin");
    }
    Trajectory out;
    out.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
    for (int j = 0; j < horizon; ++j) {
        out.push_back(sample(plan.values, (k - plan.origin_step + j) / plan.nu));
    }
    return out;
}

MpcResult solve_piloting(const MpcSpec& spec_fine, double slow_weight, const Vector& x0,
                         const Trajectory& preview, const Trajectory& slow_reference) {
    if (static_cast<int>(slow_reference.size()) != spec_fine.horizon) {
        throw std::invalid_argument("slow reference length " +
                                    std::to_string(slow_reference.size()) +
                                    " does not match horizon " +
                                    std::to_string(spec_fine.horizon));
    }
    if (slow_weight < 0.0) {
        throw std::invalid_argument("slow-state weight must be nonnegative");
    }
    const auto slow = spec_fine.model.slow_indices();
    const int ns = static_cast<int>(slow.size());
    const int n = spec_fine.model.state_dim();
    const int m = spec_fine.model.input_dim();
    const auto& base = spec_fine.cost;
    const int nr = base.outputs();

    MpcSpec spec = spec_fine;
    auto& cost = spec.cost;
    cost.output_from_state = Matrix::Zero(nr + ns, n);
    cost.output_from_state.topRows(nr) = base.output_from_state;
    cost.output_from_input = Matrix::Zero(nr + ns, m);
    cost.output_from_input.topRows(nr) = base.output_from_input;
    cost.weight = Matrix::Zero(nr + ns, nr + ns);
    cost.weight.topLeftCorner(nr, nr) = base.weight;
    for (int i = 0; i < ns; ++i) {
        cost.output_from_state(nr + i, slow[static_cast<std::size_t>(i)]) = 1.0;
        cost.weight(nr + i, nr + i) = slow_weight;
    }
    // Entry j targets predicted state j + 1; the measured state at stage 0 is
    // fixed, so its term is a constant.
    cost.reference.clear();
    for (int j = 0; j <= spec_fine.horizon; ++j) {
        const Vector& s = sample(slow_reference, j - 1);
        require_size("slow reference", ns, s.size());
        Vector r(nr + ns);
        r << base.reference_at(j), s;
        cost.reference.push_back(std::move(r));
    }
    return solve_smpc(spec, x0, preview);
}

TighteningState predict_violation(const LtiModel& model, const Vector& x0,
                                  const Trajectory& planned_inputs, const Trajectory& preview,
                                  const PolyhedralSet& state_set) {
    if (planned_inputs.size() != preview.size()) {
        throw std::invalid_argument("planned inputs and preview differ in length");
    }
    const auto slow = slow_rows(state_set, model.slow_mask());
    TighteningState out{Vector::Zero(state_set.rows()), TighteningSource::robust};
    Vector x = x0;
    for (std::size_t j = 0; j < planned_inputs.size(); ++j) {
        x = model.step(x, planned_inputs[j], preview[j]);
        const Vector excess = state_set.p() * x - state_set.q();
        for (int r = 0; r < state_set.rows(); ++r) {
            if (slow[static_cast<std::size_t>(r)] && excess(r) > out.qbar(r)) {
                out.qbar(r) = excess(r);
            }
        }
    }
    return out;
}

TighteningState passive_tightening(const Vector& x_measured, const PolyhedralSet& state_set,
                                   const std::vector<bool>& slow_mask) {
    require_size("x", state_set.dim(), x_measured.size());
    const auto slow = slow_rows(state_set, slow_mask);
    TighteningState out{Vector::Zero(state_set.rows()), TighteningSource::passive};
    const Vector excess = state_set.p() * x_measured - state_set.q();
    for (int r = 0; r < state_set.rows(); ++r) {
        if (slow[static_cast<std::size_t>(r)]) {
            out.qbar(r) = std::max(0.0, excess(r));
        }
    }
    return out;
}

SmpcController::SmpcController(SmpcSettings settings) : settings_(std::move(settings)) {
    if (settings_.horizon < 1) {
        throw std::invalid_argument("S-MPC horizon must be >= 1");
    }
}

ControlStep SmpcController::step(int k, const Vector& x, const DemandScenario& scenario) {
    check_clock(next_step_, k);
    const MpcSpec spec = make_spec(settings_.model, settings_.horizon, settings_.objective,
                                   settings_.constraints, k, 1);
    const Trajectory preview = settings_.preview == PreviewSource::actual
                                   ? accurate_preview(scenario, k, settings_.horizon)
                                   : approximate_preview(scenario, k, settings_.horizon, 1);
    const MpcResult res = solve_smpc(spec, x, preview);
    return ControlStep{res.first_input(), false, res.qp.iterations,
                       settings_.constraints.state_set.q(),
                       first_slacks(res.trajectory,
                                    static_cast<int>(settings_.constraints.soft_rows.size()))};
}

HierarchicalController::HierarchicalController(HierarchicalSettings settings)
    : settings_(std::move(settings)),
      coarse_model_(downsample(settings_.model, settings_.nu)),
      pending_(TighteningState::zero(settings_.constraints.state_set.rows())),
      state_bound_(settings_.constraints.state_set.q()) {
    if (settings_.scheduling_horizon < 1 || settings_.piloting_horizon < 1) {
        throw std::invalid_argument("horizons must be >= 1");
    }
    if (settings_.model.slow_indices().empty()) {
        throw std::invalid_argument("hierarchical control needs at least one slow state");
    }
}

ControlStep HierarchicalController::step(int k, const Vector& x, const DemandScenario& scenario) {
    check_clock(next_step_, k);
    const auto& cons = settings_.constraints;
    const int nu = settings_.nu;
    ControlStep out;
    out.qp_iterations = 0;

    if (k % nu == 0) {
        const int k_s = k / nu;
        TighteningState tightening = TighteningState::zero(cons.state_set.rows());
        if (settings_.tightening == TighteningSource::robust) {
            tightening = pending_;
        } else if (settings_.tightening == TighteningSource::passive) {
            tightening = passive_tightening(x, cons.state_set, settings_.model.slow_mask());
        }
        const MpcSpec coarse = make_spec(coarse_model_, settings_.scheduling_horizon,
                                         settings_.objective, cons, k, nu);
        const MpcResult sched =
            solve_scheduling(coarse, x,
                             approximate_preview(scenario, k_s, settings_.scheduling_horizon, nu),
                             tightening);
        plan_ = extract_slow_plan(sched.trajectory.states, settings_.model.slow_mask(), nu, k);
        state_bound_ = cons.state_set.q() - tightening.qbar;
        out.scheduled = true;
        out.qp_iterations += sched.qp.iterations;
    }

    const int hp = settings_.piloting_horizon;
    const MpcSpec fine = make_spec(settings_.model, hp, settings_.objective, cons, k, 1);
    const Trajectory preview = accurate_preview(scenario, k, hp);
    const MpcResult pilot =
        solve_piloting(fine, settings_.slow_weight, x, preview, expand_plan(plan_, k + 1, hp));
    if (settings_.tightening == TighteningSource::robust) {
        pending_ = predict_violation(settings_.model, x, pilot.trajectory.inputs, preview,
                                     cons.state_set);
    }

    out.input = pilot.first_input();
    out.qp_iterations += pilot.qp.iterations;
    out.state_bound = state_bound_;
    out.slacks = first_slacks(pilot.trajectory, static_cast<int>(cons.soft_rows.size()));
    return out;
}

}  // namespace hmpc
