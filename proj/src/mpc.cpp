#include "hmpc/mpc.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace hmpc {

const Vector& QuadraticTrackingCost::reference_at(int stage) const {
    if (reference.empty()) {
        throw std::invalid_argument("tracking cost has no reference");
    }
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(stage), reference.size() - 1);
    return reference[idx];
}

double QuadraticTrackingCost::stage(const Vector& x, const Vector& u, int stage) const {
    const Vector r = output_from_state * x + output_from_input * u - reference_at(stage);
    return r.dot(weight * r);
}

void MpcSpec::validate() const {
    const int n = model.state_dim();
    const int m = model.input_dim();
    if (horizon < 1) {
        throw std::invalid_argument("horizon must be >= 1, got " + std::to_string(horizon));
    }
    const int nr = cost.outputs();
    require_size("cost.weight.cols", nr, cost.weight.cols());
    require_size("cost.output_from_state.rows", nr, cost.output_from_state.rows());
    require_size("cost.output_from_state.cols", n, cost.output_from_state.cols());
    require_size("cost.output_from_input.rows", nr, cost.output_from_input.rows());
    require_size("cost.output_from_input.cols", m, cost.output_from_input.cols());
    if (cost.reference.empty()) {
        throw std::invalid_argument("tracking cost has no reference");
    }
    for (const auto& r : cost.reference) {
        require_size("cost.reference", nr, r.size());
    }
    if (cost.terminal_weight < 0.0) {
        throw std::invalid_argument("terminal_weight must be nonnegative");
    }
    require_size("state_set.dim", n, state_set.dim());
    require_size("input_set.dim", m, input_set.dim());
    std::set<int> seen;
    for (int row : soft_rows) {
        if (row < 0 || row >= state_set.rows() || !seen.insert(row).second) {
            throw std::invalid_argument("invalid soft row index " + std::to_string(row));
        }
    }
    if (!soft_rows.empty() && !(slack_weight > 0.0)) {
        throw std::invalid_argument("slack_weight must be positive when rows are softened");
    }
}

CondensedMpc condense(const MpcSpec& spec, const Vector& x0, const Trajectory& demand_preview) {
    spec.validate();
    const auto& model = spec.model;
    const int n = model.state_dim();
    const int m = model.input_dim();
    const int horizon = spec.horizon;
    const int ns = static_cast<int>(spec.soft_rows.size());
    const int nr = spec.cost.outputs();
    require_size("x0", n, x0.size());
    if (static_cast<int>(demand_preview.size()) != horizon) {
        throw std::invalid_argument("demand preview length " +
                                    std::to_string(demand_preview.size()) +
                                    " does not match horizon " + std::to_string(horizon));
    }

    const int nu_total = m * horizon;
    const int nz = nu_total + ns * horizon;

    CondensedMpc out;
    out.horizon_ = horizon;
    out.states_ = n;
    out.inputs_ = m;
    out.soft_ = ns;

    // x_{j+1} = A x_j + B1 u_j + B2 d_j, stacked as X = Gamma U + offset.
    Matrix gamma = Matrix::Zero(n * (horizon + 1), nu_total);
    Vector offset(n * (horizon + 1));
    offset.head(n) = x0;
    for (int j = 0; j < horizon; ++j) {
        require_size("demand_preview[" + std::to_string(j) + "]", model.demand_dim(),
                     demand_preview[j].size());
        offset.segment(n * (j + 1), n) =
            model.a() * offset.segment(n * j, n) + model.b_demand() * demand_preview[j];
        gamma.block(n * (j + 1), 0, n, m * j) = model.a() * gamma.block(n * j, 0, n, m * j);
        gamma.block(n * (j + 1), m * j, n, m) = model.b_control();
    }

    // Outputs r_j = E x_j + F u_j = M_j U + c_j + r^d_j offsets.
    Matrix outputs = Matrix::Zero(nr * (horizon + 1), nu_total);
    Vector residual(nr * (horizon + 1));
    Matrix weighted = Matrix::Zero(nr * (horizon + 1), nu_total);
    Vector weighted_residual(nr * (horizon + 1));
    const auto& c = spec.cost;
    for (int j = 0; j <= horizon; ++j) {
        auto block = outputs.middleRows(nr * j, nr);
        block = c.output_from_state * gamma.middleRows(n * j, n);
        if (j < horizon) {
            block.middleCols(m * j, m) += c.output_from_input;
        }
        residual.segment(nr * j, nr) =
            c.output_from_state * offset.segment(n * j, n) - c.reference_at(j);
        const double scale = j == horizon ? 1.0 + c.terminal_weight : 1.0;
        weighted.middleRows(nr * j, nr) = scale * c.weight * block;
        weighted_residual.segment(nr * j, nr) = scale * c.weight * residual.segment(nr * j, nr);
    }

    auto& qp = out.qp_;
    qp.hessian = Matrix::Zero(nz, nz);
    qp.gradient = Vector::Zero(nz);
    Matrix h_inputs = 2.0 * outputs.transpose() * weighted;
    qp.hessian.topLeftCorner(nu_total, nu_total) = 0.5 * (h_inputs + h_inputs.transpose());
    qp.gradient.head(nu_total) = 2.0 * outputs.transpose() * weighted_residual;
    qp.hessian.diagonal().tail(ns * horizon).setConstant(2.0 * spec.slack_weight);
    out.constant_ = residual.dot(weighted_residual);

    const auto& xs = spec.state_set;
    const auto& us = spec.input_set;
    const int nqx = xs.rows();
    const int nqu = us.rows();
    const int rows = (nqx + nqu + ns) * horizon;
    qp.constraint_matrix = Matrix::Zero(rows, nz);
    qp.constraint_bound = Vector::Zero(rows);

    int row = 0;
    for (int j = 1; j <= horizon; ++j) {
        qp.constraint_matrix.block(row, 0, nqx, nu_total) = xs.p() * gamma.middleRows(n * j, n);
        qp.constraint_bound.segment(row, nqx) = xs.q() - xs.p() * offset.segment(n * j, n);
        for (int k = 0; k < ns; ++k) {
            qp.constraint_matrix(row + spec.soft_rows[k], nu_total + ns * (j - 1) + k) = -1.0;
        }
        row += nqx;
    }
    for (int j = 0; j < horizon; ++j) {
        qp.constraint_matrix.block(row, m * j, nqu, m) = us.p();
        qp.constraint_bound.segment(row, nqu) = us.q();
        row += nqu;
    }
    for (int k = 0; k < ns * horizon; ++k) {
        qp.constraint_matrix(row + k, nu_total + k) = -1.0;
    }

    out.state_from_inputs_ = std::move(gamma);
    out.state_offset_ = std::move(offset);
    return out;
}

MpcTrajectory CondensedMpc::decode(const Vector& z) const {
    require_size("z", input_variables() + slack_variables(), z.size());
    MpcTrajectory traj;
    const Vector u = z.head(input_variables());
    const Vector x = state_from_inputs_ * u + state_offset_;
    for (int j = 0; j < horizon_; ++j) {
        traj.inputs.emplace_back(u.segment(inputs_ * j, inputs_));
        traj.slacks.emplace_back(z.segment(input_variables() + soft_ * j, soft_));
    }
    for (int j = 0; j <= horizon_; ++j) {
        traj.states.emplace_back(x.segment(states_ * j, states_));
    }
    return traj;
}

double evaluate_cost(const MpcSpec& spec, const Trajectory& states, const Trajectory& inputs) {
    const int horizon = spec.horizon;
    if (static_cast<int>(states.size()) != horizon + 1 ||
        static_cast<int>(inputs.size()) != horizon) {
        throw std::invalid_argument("evaluate_cost expects horizon+1 states and horizon inputs");
    }
    const Vector no_input = Vector::Zero(spec.model.input_dim());
    double total = 0.0;
    for (int j = 0; j < horizon; ++j) {
        total += spec.cost.stage(states[j], inputs[j], j);
    }
    total += (1.0 + spec.cost.terminal_weight) * spec.cost.stage(states[horizon], no_input, horizon);
    return total;
}

}  // namespace hmpc
