#pragma once

// Test-only reference computations. Nothing here calls into the solver or the
// condensing code; they are independent routes to the same answers.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hmpc/qp.hpp"

namespace oracle {

using hmpc::Matrix;
using hmpc::Vector;

struct EnumeratedOptimum {
    Vector z;
    Vector multipliers;
    double objective;
};

/// Exhaustive active-set search: solve the equality-constrained KKT system for
/// every subset of at most d rows, keep primal-feasible points with nonnegative
/// multipliers, return the cheapest. Exact for strictly convex problems.
inline std::optional<EnumeratedOptimum> enumerate_active_sets(const hmpc::QpProblem& qp) {
    const int d = qp.variables();
    const int c = qp.constraints();
    std::optional<EnumeratedOptimum> best;
    std::vector<int> subset;

    auto try_subset = [&]() {
        const int k = static_cast<int>(subset.size());
        Matrix kkt = Matrix::Zero(d + k, d + k);
        Vector rhs(d + k);
        kkt.topLeftCorner(d, d) = qp.hessian;
        rhs.head(d) = -qp.gradient;
        for (int r = 0; r < k; ++r) {
            kkt.block(d + r, 0, 1, d) = qp.constraint_matrix.row(subset[r]);
            kkt.block(0, d + r, d, 1) = qp.constraint_matrix.row(subset[r]).transpose();
            rhs(d + r) = qp.constraint_bound(subset[r]);
        }
        Eigen::FullPivLU<Matrix> lu(kkt);
        if (!lu.isInvertible()) {
            return;
        }
        const Vector sol = lu.solve(rhs);
        const Vector z = sol.head(d);
        if (c > 0 && (qp.constraint_matrix * z - qp.constraint_bound).maxCoeff() > 1e-9) {
            return;
        }
        Vector lambda = Vector::Zero(c);
        for (int r = 0; r < k; ++r) {
            if (sol(d + r) < -1e-9) {
                return;
            }
            lambda(subset[r]) = sol(d + r);
        }
        const double obj = qp.objective(z);
        if (!best || obj < best->objective) {
            best = EnumeratedOptimum{z, lambda, obj};
        }
    };

    // Depth-first enumeration of subsets with |S| <= d.
    auto recurse = [&](auto&& self, int start) -> void {
        try_subset();
        if (static_cast<int>(subset.size()) == d) {
            return;
        }
        for (int i = start; i < c; ++i) {
            subset.push_back(i);
            self(self, i + 1);
            subset.pop_back();
        }
    };
    recurse(recurse, 0);
    return best;
}

/// Random strictly convex QP with z = 0 strictly feasible.
inline hmpc::QpProblem random_strictly_convex_qp(std::mt19937_64& rng, int d, int c) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> positive(0.1, 2.0);
    Matrix l(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            l(i, j) = normal(rng);
        }
    }
    hmpc::QpProblem qp;
    qp.hessian = l * l.transpose() + 0.1 * Matrix::Identity(d, d);
    qp.gradient = Vector(d);
    for (int i = 0; i < d; ++i) {
        qp.gradient(i) = 3.0 * normal(rng);
    }
    qp.constraint_matrix = Matrix(c, d);
    qp.constraint_bound = Vector(c);
    for (int r = 0; r < c; ++r) {
        for (int j = 0; j < d; ++j) {
            qp.constraint_matrix(r, j) = normal(rng);
        }
        qp.constraint_bound(r) = positive(rng);
    }
    return qp;
}

/// Plain loop evaluation of x+ = A x + B1 u + B2 d, element by element.
inline Vector step_elementwise(const Matrix& a, const Matrix& b1, const Matrix& b2,
                               const Vector& x, const Vector& u, const Vector& d) {
    Vector out(a.rows());
    for (int i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * x(j);
        for (int j = 0; j < b1.cols(); ++j) acc += b1(i, j) * u(j);
        for (int j = 0; j < b2.cols(); ++j) acc += b2(i, j) * d(j);
        out(i) = acc;
    }
    return out;
}

}  // namespace oracle
