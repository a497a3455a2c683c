#include "hmpc/model.hpp"

#include <algorithm>
#include <cmath>

namespace hmpc {

LtiModel::LtiModel(Matrix a, Matrix b_control, Matrix b_demand, double sample_period,
                   std::vector<bool> slow_mask)
    : a_(std::move(a)),
      b_control_(std::move(b_control)),
      b_demand_(std::move(b_demand)),
      sample_period_(sample_period),
      slow_mask_(std::move(slow_mask)) {
    const auto n = a_.rows();
    require_size("A.cols", n, a_.cols());
    require_size("B1.rows", n, b_control_.rows());
    require_size("B2.rows", n, b_demand_.rows());
    require_size("slow_mask", n, static_cast<long>(slow_mask_.size()));
    if (!(sample_period_ > 0.0)) {
        throw std::invalid_argument("sample_period must be positive");
    }
}

std::vector<int> LtiModel::slow_indices() const {
    std::vector<int> out;
    for (int i = 0; i < state_dim(); ++i) {
        if (slow_mask_[i]) {
            out.push_back(i);
        }
    }
    return out;
}

Vector LtiModel::step(const Vector& x, const Vector& u, const Vector& demand) const {
    require_size("x", state_dim(), x.size());
    require_size("u", input_dim(), u.size());
    require_size("u_hat", demand_dim(), demand.size());
    return a_ * x + b_control_ * u + b_demand_ * demand;
}

LtiModel downsample(const LtiModel& model, int nu) {
    if (nu < 1) {
        throw std::invalid_argument("downsample: nu must be >= 1, got " + std::to_string(nu));
    }
    const int n = model.state_dim();
    Matrix power = Matrix::Identity(n, n);
    Matrix b_control = Matrix::Zero(n, model.input_dim());
    Matrix b_demand = Matrix::Zero(n, model.demand_dim());
    for (int j = 0; j < nu; ++j) {
        b_control += power * model.b_control();
        b_demand += power * model.b_demand();
        power = (power * model.a()).eval();
    }
    return {std::move(power), std::move(b_control), std::move(b_demand),
            model.sample_period() * nu, model.slow_mask()};
}

PolyhedralSet::PolyhedralSet(Matrix p, Vector q) : p_(std::move(p)), q_(std::move(q)) {
    require_size("q", p_.rows(), q_.size());
}

PolyhedralSet PolyhedralSet::box(const Vector& lower, const Vector& upper) {
    require_size("upper", lower.size(), upper.size());
    const auto n = lower.size();
    Matrix p = Matrix::Zero(2 * n, n);
    Vector q(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p(2 * i, i) = 1.0;
        q(2 * i) = upper(i);
        p(2 * i + 1, i) = -1.0;
        q(2 * i + 1) = -lower(i);
    }
    return {std::move(p), std::move(q)};
}

Membership PolyhedralSet::contains(const Vector& x) const {
    require_size("x", dim(), x.size());
    if (rows() == 0) {
        return {true, 0.0};
    }
    const double worst = (p_ * x - q_).maxCoeff();
    if (worst <= 0.0) {
        return {true, 0.0};
    }
    return {false, worst};
}

std::optional<int> PolyhedralSet::row_coordinate(int row) const {
    std::optional<int> found;
    for (int j = 0; j < dim(); ++j) {
        if (p_(row, j) != 0.0) {
            if (found) {
                return std::nullopt;
            }
            found = j;
        }
    }
    return found;
}

PolyhedralSet PolyhedralSet::tightened(const Vector& shrink) const {
    require_size("shrink", rows(), shrink.size());
    return {p_, q_ - shrink};
}

LtiModel vehicle_thermal_model() {
    Matrix a(4, 4);
    a << 1, 1, 0, 0,
         0, 1, 0, 0,
         0, 0, 1, 0,
         0, 0, 0, 1;
    Matrix b_control(4, 3);
    b_control << 1, 1, 0,
                 1, -1, 0,
                 -0.8, 0.8, -0.15,
                 1, 1, -0.85;
    Matrix b_demand(4, 1);
    b_demand << 0, 0, -0.25, 1;
    return {std::move(a), std::move(b_control), std::move(b_demand), 1.0,
            {false, false, false, true}};
}

PolyhedralSet vehicle_state_bounds() {
    return PolyhedralSet::box(Eigen::Vector4d(-1, -20, 0, 0), Eigen::Vector4d(100, 20, 100, 30));
}

PolyhedralSet vehicle_input_bounds() {
    return PolyhedralSet::box(Eigen::Vector3d(-1, -1, -1), Eigen::Vector3d(1, 1, 1));
}

}  // namespace hmpc
