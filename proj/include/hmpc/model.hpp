#pragma once

#include <optional>
#include <vector>

#include "hmpc/types.hpp"

namespace hmpc {

/// Discrete-time LTI plant  x+ = A x + B1 u + B2 d  with a fast/slow state partition.
///
/// `u` is the adjustable control input and `d` the measured, non-adjustable
/// demand. Immutable once constructed.
class LtiModel {
public:
    LtiModel(Matrix a, Matrix b_control, Matrix b_demand, double sample_period,
             std::vector<bool> slow_mask);

    [[nodiscard]] const Matrix& a() const noexcept { return a_; }
    [[nodiscard]] const Matrix& b_control() const noexcept { return b_control_; }
    [[nodiscard]] const Matrix& b_demand() const noexcept { return b_demand_; }
    [[nodiscard]] double sample_period() const noexcept { return sample_period_; }
    [[nodiscard]] const std::vector<bool>& slow_mask() const noexcept { return slow_mask_; }

    [[nodiscard]] int state_dim() const noexcept { return static_cast<int>(a_.rows()); }
    [[nodiscard]] int input_dim() const noexcept { return static_cast<int>(b_control_.cols()); }
    [[nodiscard]] int demand_dim() const noexcept { return static_cast<int>(b_demand_.cols()); }

    /// Indices of the slow states, in ascending order.
    [[nodiscard]] std::vector<int> slow_indices() const;
    [[nodiscard]] bool is_slow(int state) const { return slow_mask_.at(state); }

    [[nodiscard]] Vector step(const Vector& x, const Vector& u, const Vector& demand) const;

private:
    Matrix a_;
    Matrix b_control_;
    Matrix b_demand_;
    double sample_period_;
    std::vector<bool> slow_mask_;
};

/// Model of `nu` fine steps with inputs held constant over the block.
/// A^s = A^nu, B^s = sum_{j<nu} A^j B for both input matrices.
[[nodiscard]] LtiModel downsample(const LtiModel& model, int nu);

struct Membership {
    bool inside;
    double violation;  // max(0, max_i (P x - q)_i)
};

/// Polyhedron {x | P x <= q} in halfspace form.
class PolyhedralSet {
public:
    PolyhedralSet(Matrix p, Vector q);

    /// Box lo <= x <= hi. Rows are interleaved per coordinate: row 2i is the
    /// upper bound of x_i (+1), row 2i+1 its lower bound (-1).
    static PolyhedralSet box(const Vector& lower, const Vector& upper);

    [[nodiscard]] const Matrix& p() const noexcept { return p_; }
    [[nodiscard]] const Vector& q() const noexcept { return q_; }
    [[nodiscard]] int rows() const noexcept { return static_cast<int>(q_.size()); }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(p_.cols()); }

    [[nodiscard]] Membership contains(const Vector& x) const;

    /// Coordinate bounded by `row` when the row has exactly one nonzero, else nullopt.
    [[nodiscard]] std::optional<int> row_coordinate(int row) const;

    /// {x | P x <= q - shrink}.
    [[nodiscard]] PolyhedralSet tightened(const Vector& shrink) const;

private:
    Matrix p_;
    Vector q_;
};

/// Row index of the upper (or lower) bound of `coordinate` in a `PolyhedralSet::box`.
[[nodiscard]] constexpr int box_upper_row(int coordinate) noexcept { return 2 * coordinate; }
[[nodiscard]] constexpr int box_lower_row(int coordinate) noexcept { return 2 * coordinate + 1; }

/// Four-state vehicle model: position, speed, stored energy, thermal index (slow).
/// Inputs: acceleration, deceleration, thermal-management power. Demand: external load.
[[nodiscard]] LtiModel vehicle_thermal_model();

/// [-1,-20,0,0] <= x <= [100,20,100,30]
[[nodiscard]] PolyhedralSet vehicle_state_bounds();

/// [-1,-1,-1] <= u <= [1,1,1]
[[nodiscard]] PolyhedralSet vehicle_input_bounds();

}  // namespace hmpc
