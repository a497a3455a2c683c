#pragma once

#include <vector>

#include "hmpc/model.hpp"
#include "hmpc/qp.hpp"
#include "hmpc/types.hpp"

namespace hmpc {

/// Stage cost ||E x + F u - r_j||^2_W summed over stages j = 0..N.
///
/// The terminal stage j = N has no input; its term is E x_N - r_N.
struct QuadraticTrackingCost {
    Matrix output_from_state;  // E (n_r x n)
    Matrix output_from_input;  // F (n_r x m)
    Matrix weight;             // W (n_r x n_r), symmetric PSD
    /// Desired output per stage. Shorter sequences hold their last entry.
    Trajectory reference;
    /// Extra multiple of the terminal stage term. Zero leaves the terminal stage
    /// weighted like every other stage.
    double terminal_weight = 0.0;

    [[nodiscard]] int outputs() const noexcept { return static_cast<int>(weight.rows()); }
    [[nodiscard]] const Vector& reference_at(int stage) const;
    [[nodiscard]] double stage(const Vector& x, const Vector& u, int stage) const;
};

struct MpcSpec {
    LtiModel model;
    int horizon = 1;
    QuadraticTrackingCost cost;
    PolyhedralSet state_set;
    PolyhedralSet input_set;
    /// State-set rows relaxed to P x <= q + s, s >= 0, with penalty slack_weight * s^2.
    std::vector<int> soft_rows;
    double slack_weight = 1e6;

    void validate() const;
};

/// Decoded open-loop plan.
struct MpcTrajectory {
    Trajectory inputs;  // u_0 .. u_{N-1}
    Trajectory states;  // x_0 .. x_N (x_0 is the measured state)
    Trajectory slacks;  // s_1 .. s_N, one entry per soft row
};

/// Input-only (condensed) QP of an MPC problem plus the affine maps that
/// recover the predicted trajectory from a decision vector.
///
/// Decision vector layout: [u_0, ..., u_{N-1}, s_1, ..., s_N].
class CondensedMpc {
public:
    [[nodiscard]] const QpProblem& qp() const noexcept { return qp_; }
    /// Cost offset: evaluate_cost = qp.objective(z) + constant() - slack penalty.
    [[nodiscard]] double constant() const noexcept { return constant_; }
    [[nodiscard]] int horizon() const noexcept { return horizon_; }
    [[nodiscard]] int input_variables() const noexcept { return horizon_ * inputs_; }
    [[nodiscard]] int slack_variables() const noexcept { return horizon_ * soft_; }

    [[nodiscard]] MpcTrajectory decode(const Vector& z) const;

private:
    friend CondensedMpc condense(const MpcSpec&, const Vector&, const Trajectory&);

    QpProblem qp_;
    double constant_ = 0.0;
    int horizon_ = 0;
    int states_ = 0;
    int inputs_ = 0;
    int soft_ = 0;
    Matrix state_from_inputs_;  // stacked x_0..x_N as affine map of U
    Vector state_offset_;
};

/// Throws std::invalid_argument if the preview length differs from the horizon.
[[nodiscard]] CondensedMpc condense(const MpcSpec& spec, const Vector& x0,
                                    const Trajectory& demand_preview);

/// Sum of stage costs for states x_0..x_N and inputs u_0..u_{N-1}.
[[nodiscard]] double evaluate_cost(const MpcSpec& spec, const Trajectory& states,
                                   const Trajectory& inputs);

}  // namespace hmpc
