#include "hmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>

namespace hmpc {

void QpProblem::validate() const {
    const auto d = gradient.size();
    require_size("H.rows", d, hessian.rows());
    require_size("H.cols", d, hessian.cols());
    require_size("G.cols", d, constraint_matrix.cols());
    require_size("g", constraint_matrix.rows(), constraint_bound.size());
}

double QpProblem::objective(const Vector& z) const {
    return 0.5 * z.dot(hessian * z) + gradient.dot(z);
}

const char* to_string(QpStatus status) noexcept {
    switch (status) {
        case QpStatus::optimal:
            return "optimal";
        case QpStatus::max_iterations:
            return "max_iterations";
        case QpStatus::numerical_failure:
            return "numerical_failure";
    }
    return "unknown";
}

KktResiduals kkt_residuals(const QpProblem& problem, const Vector& z, const Vector& multipliers) {
    const Vector lambda = multipliers.cwiseMax(0.0);
    const Vector slack = problem.constraint_matrix * z - problem.constraint_bound;
    KktResiduals out{0.0, 0.0, 0.0};
    if (slack.size() > 0) {
        out.primal = std::max(0.0, slack.maxCoeff());
        out.complementarity = lambda.cwiseProduct(slack).cwiseAbs().maxCoeff();
    }
    const Vector stationarity = problem.hessian * z + problem.gradient +
                                problem.constraint_matrix.transpose() * lambda;
    out.dual = stationarity.size() > 0 ? stationarity.lpNorm<Eigen::Infinity>() : 0.0;
    return out;
}

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

double inf_norm(const Vector& v) { return v.size() > 0 ? v.lpNorm<Eigen::Infinity>() : 0.0; }

QpSolution certify(const QpProblem& problem, const Vector& z, const Vector& multipliers,
                   int iterations) {
    QpSolution sol;
    sol.z = z;
    sol.multipliers = multipliers.cwiseMax(0.0);
    const auto res = kkt_residuals(problem, sol.z, sol.multipliers);
    sol.primal_residual = res.primal;
    sol.dual_residual = res.dual;
    sol.objective = problem.objective(sol.z);
    sol.iterations = iterations;
    return sol;
}

bool within_tolerance(const QpProblem& problem, const QpSolution& sol,
                      const QpSettings& settings) {
    if (sol.primal_residual > settings.primal_tolerance ||
        sol.dual_residual > settings.dual_tolerance) {
        return false;
    }
    return kkt_residuals(problem, sol.z, sol.multipliers).complementarity <=
           settings.complementarity_tolerance;
}

struct ActiveSetPoint {
    Vector z;
    Vector multipliers;
};

/// Solve the equality-constrained KKT system on an active set. Single-variable
/// rows fix their coordinate; the remaining rows enter a regularized KKT system
/// solved by proximal iterative refinement centred on (z, lambda).
std::optional<ActiveSetPoint> solve_on_active_set(const QpProblem& problem, const SparseRows& g,
                                                  const std::vector<bool>& active,
                                                  const Vector& z, const Vector& lambda,
                                                  const QpSettings& settings) {
    const int n = problem.variables();
    const int m = problem.constraints();
    const Vector& bound = problem.constraint_bound;
    const double delta = settings.polish_regularization;

    std::vector<int> fixed_row(n, -1);
    std::vector<double> fixed_coeff(n, 0.0);
    std::vector<int> general_rows;
    for (int i = 0; i < m; ++i) {
        if (!active[i]) {
            continue;
        }
        int nnz = 0;
        int col = -1;
        double coeff = 0.0;
        for (SparseRows::InnerIterator it(g, i); it; ++it) {
            ++nnz;
            col = static_cast<int>(it.col());
            coeff = it.value();
        }
        if (nnz == 1 && fixed_row[col] < 0) {
            fixed_row[col] = i;
            fixed_coeff[col] = coeff;
        } else if (nnz > 0) {
            general_rows.push_back(i);
        }
    }

    Vector z_fixed = Vector::Zero(n);
    std::vector<int> free_idx;
    for (int j = 0; j < n; ++j) {
        if (fixed_row[j] >= 0) {
            z_fixed(j) = bound(fixed_row[j]) / fixed_coeff[j];
        } else {
            free_idx.push_back(j);
        }
    }
    const int nf = static_cast<int>(free_idx.size());
    const int ng = static_cast<int>(general_rows.size());

    Matrix g_general = Matrix::Zero(ng, n);
    Vector b_general(ng);
    for (int r = 0; r < ng; ++r) {
        const int i = general_rows[r];
        for (SparseRows::InnerIterator it(g, i); it; ++it) {
            g_general(r, it.col()) = it.value();
        }
        b_general(r) = bound(i);
    }

    Matrix kkt = Matrix::Zero(nf + ng, nf + ng);
    kkt.topLeftCorner(nf, nf) = problem.hessian(free_idx, free_idx);
    const Matrix g_free = g_general(Eigen::all, free_idx);
    kkt.bottomLeftCorner(ng, nf) = g_free;
    kkt.topRightCorner(nf, ng) = g_free.transpose();

    Vector rhs(nf + ng);
    rhs.head(nf) = -(problem.gradient + problem.hessian * z_fixed)(free_idx);
    rhs.tail(ng) = b_general - g_general * z_fixed;

    Matrix regularized = kkt;
    regularized.diagonal().head(nf).array() += delta;
    regularized.diagonal().tail(ng).array() -= delta;
    const Eigen::LDLT<Matrix> ldlt(regularized);
    if (ldlt.info() != Eigen::Success) {
        return std::nullopt;
    }

    Vector center(nf + ng);
    center.head(nf) = z(free_idx);
    for (int r = 0; r < ng; ++r) {
        center(nf + r) = lambda(general_rows[r]);
    }
    Vector shift(nf + ng);
    shift.head(nf) = delta * center.head(nf);
    shift.tail(ng) = -delta * center.tail(ng);
    Vector t = ldlt.solve(rhs + shift);
    for (int r = 0; r < settings.polish_refinements; ++r) {
        t += ldlt.solve(rhs - kkt * t);
    }
    if (!t.allFinite()) {
        return std::nullopt;
    }

    ActiveSetPoint out{z_fixed, Vector::Zero(m)};
    out.z(free_idx) = t.head(nf);
    for (int r = 0; r < ng; ++r) {
        out.multipliers(general_rows[r]) = t(nf + r);
    }
    const Vector grad =
        problem.hessian * out.z + problem.gradient + g_general.transpose() * t.tail(ng);
    for (int j = 0; j < n; ++j) {
        if (fixed_row[j] >= 0) {
            out.multipliers(fixed_row[j]) = -grad(j) / fixed_coeff[j];
        }
    }
    return out;
}

/// Polish from an active-set guess. Rows whose multiplier comes out negative
/// are released and violated rows are added, for a few rounds.
std::optional<QpSolution> polish(const QpProblem& problem, const SparseRows& g,
                                 std::vector<bool> active, const Vector& z,
                                 const Vector& lambda, int iterations,
                                 const QpSettings& settings) {
    const int m = problem.constraints();
    for (int round = 0; round <= settings.polish_corrections; ++round) {
        const auto point = solve_on_active_set(problem, g, active, z, lambda, settings);
        if (!point) {
            return std::nullopt;
        }
        const Vector excess = g * point->z - problem.constraint_bound;
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            if (active[i] && point->multipliers(i) < -settings.dual_tolerance) {
                active[i] = false;
                changed = true;
            } else if (!active[i] && excess(i) > settings.primal_tolerance) {
                active[i] = true;
                changed = true;
            }
        }
        if (!changed) {
            QpSolution sol = certify(problem, point->z, point->multipliers, iterations);
            if (!within_tolerance(problem, sol, settings)) {
                return std::nullopt;
            }
            sol.status = QpStatus::optimal;
            sol.polished = true;
            return sol;
        }
    }
    return std::nullopt;
}

/// Largest alpha in (0, 1] keeping v + alpha dv >= 0.
double max_step(const Vector& v, const Vector& dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) {
            alpha = std::min(alpha, -v(i) / dv(i));
        }
    }
    return alpha;
}

/// Normal-equation system H + G' W G of the interior-point Newton step.
/// Single-variable rows only touch the diagonal; the other rows are kept dense.
class NewtonSystem {
public:
    NewtonSystem(const QpProblem& problem, const SparseRows& g) : problem_(problem) {
        double scale = problem.hessian.size() > 0 ? problem.hessian.cwiseAbs().maxCoeff() : 0.0;
        std::vector<int> general;
        for (int i = 0; i < g.outerSize(); ++i) {
            int nnz = 0;
            for (SparseRows::InnerIterator it(g, i); it; ++it) {
                ++nnz;
                scale = std::max(scale, it.value() * it.value());
            }
            if (nnz == 1) {
                SparseRows::InnerIterator it(g, i);
                bound_rows_.push_back({i, static_cast<int>(it.col()), it.value()});
            } else if (nnz > 1) {
                general.push_back(i);
            }
        }
        general_rows_ = general;
        general_ = Matrix::Zero(static_cast<Eigen::Index>(general.size()), problem.variables());
        for (std::size_t r = 0; r < general.size(); ++r) {
            for (SparseRows::InnerIterator it(g, general[r]); it; ++it) {
                general_(static_cast<Eigen::Index>(r), it.col()) = it.value();
            }
        }
        base_regularization_ = 1e-12 * std::max(1.0, scale);
    }

    bool factor(const Vector& w) {
        matrix_ = problem_.hessian;
        for (const auto& b : bound_rows_) {
            matrix_(b.col, b.col) += w(b.row) * b.coeff * b.coeff;
        }
        if (!general_rows_.empty()) {
            const Vector root = w(general_rows_).cwiseSqrt();
            const Matrix scaled = root.asDiagonal() * general_;
            matrix_.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
            matrix_.triangularView<Eigen::StrictlyUpper>() = matrix_.transpose();
        }
        double reg = base_regularization_;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Matrix shifted = matrix_;
            shifted.diagonal().array() += reg;
            llt_.compute(shifted);
            if (llt_.info() == Eigen::Success) {
                return true;
            }
            reg *= 100.0;
        }
        return false;
    }

    [[nodiscard]] Vector solve(const Vector& rhs) const {
        Vector x = llt_.solve(rhs);
        x += llt_.solve(rhs - matrix_ * x);
        return x;
    }

private:
    struct BoundRow {
        int row;
        int col;
        double coeff;
    };

    const QpProblem& problem_;
    std::vector<BoundRow> bound_rows_;
    std::vector<int> general_rows_;
    Matrix general_;
    double base_regularization_ = 0.0;
    Matrix matrix_;
    Eigen::LLT<Matrix> llt_;
};

struct Direction {
    Vector dz;
    Vector ds;
    Vector dl;
};

}  // namespace

QpSolution solve(const QpProblem& problem, const QpSettings& settings,
                 const std::optional<Vector>& initial_z) {
    problem.validate();
    const int n = problem.variables();
    const int m = problem.constraints();

    QpSolution failure;
    failure.z = Vector::Zero(n);
    failure.multipliers = Vector::Zero(m);
    failure.status = QpStatus::numerical_failure;

    if (!problem.hessian.allFinite() || !problem.gradient.allFinite() ||
        !problem.constraint_matrix.allFinite() || !problem.constraint_bound.allFinite()) {
        failure.diagnostic = "non-finite problem data";
        return failure;
    }
    const double h_max = n > 0 ? problem.hessian.cwiseAbs().maxCoeff() : 0.0;
    if (n > 0 && (problem.hessian - problem.hessian.transpose()).cwiseAbs().maxCoeff() >
                     1e-12 * std::max(1.0, h_max)) {
        failure.diagnostic = "hessian is not symmetric";
        return failure;
    }
    {
        Matrix shifted = problem.hessian;
        shifted.diagonal().array() += 1e-9 * std::max(1.0, h_max);
        const Eigen::LLT<Matrix> check(shifted);
        if (check.info() != Eigen::Success) {
            failure.diagnostic = "hessian is not positive semidefinite";
            return failure;
        }
    }

    const SparseRows g = problem.constraint_matrix.sparseView();
    const Vector& bound = problem.constraint_bound;
    const Matrix& h = problem.hessian;
    const Vector& f = problem.gradient;
    NewtonSystem newton(problem, g);

    // Newton direction for residuals (rd, rp, rc) of
    // H z + f + G' l = 0, G z + s = g, s .* l = sigma mu.
    auto direction = [&](const Vector& s, const Vector& l, const Vector& rd, const Vector& rp,
                         const Vector& rc) {
        const Vector w = l.cwiseQuotient(s);
        Direction d;
        d.dz = newton.solve(-rd - g.transpose() * (w.cwiseProduct(rp) - rc.cwiseQuotient(s)));
        d.dl = w.cwiseProduct(g * d.dz + rp) - rc.cwiseQuotient(s);
        d.ds = -(rc + s.cwiseProduct(d.dl)).cwiseQuotient(l);
        return d;
    };

    Vector z = Vector::Zero(n);
    if (initial_z) {
        require_size("initial_z", n, initial_z->size());
        z = *initial_z;
    }
    Vector s = Vector::Ones(m);
    Vector l = Vector::Ones(m);

    // Starting point: affine-scaling step from unit slacks and multipliers,
    // then push both away from the boundary.
    if (!newton.factor(Vector::Ones(m))) {
        failure.diagnostic = "KKT factorization failed";
        return failure;
    }
    {
        const Vector rd = h * z + f + g.transpose() * l;
        const Vector rp = g * z + s - bound;
        const Direction d = direction(s, l, rd, rp, s.cwiseProduct(l));
        z += d.dz;
        s = (s + d.ds).cwiseAbs().cwiseMax(1.0);
        l = (l + d.dl).cwiseAbs().cwiseMax(1.0);
    }

    std::vector<bool> active(m, false);
    std::vector<bool> polished_active;

    for (int it = 1; it <= settings.max_iterations; ++it) {
        if (!z.allFinite() || !s.allFinite() || !l.allFinite()) {
            failure.diagnostic = "iterate diverged";
            failure.iterations = it;
            return failure;
        }

        // Guess the active set; try it once it stops changing between
        // iterations, and always before accepting the raw interior iterate.
        bool settled = true;
        for (int i = 0; i < m; ++i) {
            const bool a = l(i) > s(i);
            settled = settled && a == active[i];
            active[i] = a;
        }
        QpSolution candidate = certify(problem, z, l, it - 1);
        const bool converged = within_tolerance(problem, candidate, settings);
        if (settings.polish && (settled || converged) && active != polished_active) {
            polished_active = active;
            if (auto polished = polish(problem, g, active, z, l, it - 1, settings)) {
                return *polished;
            }
        }
        if (converged) {
            candidate.status = QpStatus::optimal;
            return candidate;
        }

        // Primal infeasibility certificate: l >= 0, G' l = 0, g' l < 0.
        if (m > 0) {
            const double l_norm = inf_norm(l);
            const Vector gt_l = g.transpose() * l;
            if (inf_norm(gt_l) <= settings.infeasibility_tolerance * l_norm * 1e3 &&
                bound.dot(l) < -settings.infeasibility_tolerance * l_norm &&
                l_norm > 1e6) {
                failure.diagnostic = "primal infeasibility detected";
                failure.iterations = it;
                return failure;
            }
        }

        const Vector rd = h * z + f + g.transpose() * l;
        const Vector rp = g * z + s - bound;
        const double mu = m > 0 ? s.dot(l) / m : 0.0;

        // Complementarity has collapsed without meeting the residual
        // tolerances: further Newton steps only amplify rounding error.
        if (m > 0 && mu < 1e-16 * std::max(1.0, h_max)) {
            candidate.status = QpStatus::max_iterations;
            candidate.diagnostic = "stalled: primal residual " +
                                   std::to_string(candidate.primal_residual) +
                                   ", dual residual " + std::to_string(candidate.dual_residual);
            return candidate;
        }
        if (!newton.factor(l.cwiseQuotient(s))) {
            candidate.status = QpStatus::numerical_failure;
            candidate.diagnostic = "KKT factorization failed: dual residual " +
                                   std::to_string(candidate.dual_residual);
            return candidate;
        }

        const Vector sl = s.cwiseProduct(l);
        const Direction aff = direction(s, l, rd, rp, sl);
        const double alpha_aff = std::min(max_step(s, aff.ds), max_step(l, aff.dl));
        double sigma = 0.0;
        if (mu > 0.0) {
            const double mu_aff = (s + alpha_aff * aff.ds).dot(l + alpha_aff * aff.dl) / m;
            sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
        }

        const Vector rc =
            sl + aff.ds.cwiseProduct(aff.dl) - Vector::Constant(m, sigma * mu);
        const Direction d = direction(s, l, rd, rp, rc);
        const double alpha =
            std::min(1.0, settings.step_fraction * std::min(max_step(s, d.ds), max_step(l, d.dl)));
        z += alpha * d.dz;
        s += alpha * d.ds;
        l += alpha * d.dl;
    }

    QpSolution last = certify(problem, z, l, settings.max_iterations);
    if (within_tolerance(problem, last, settings)) {
        last.status = QpStatus::optimal;
        return last;
    }
    last.status = QpStatus::max_iterations;
    last.diagnostic = "iteration cap reached";
    return last;
}

}  // namespace hmpc
