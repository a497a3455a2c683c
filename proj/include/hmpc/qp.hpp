#pragma once

#include <optional>
#include <string>

#include "hmpc/types.hpp"

namespace hmpc {

/// minimize 0.5 z'Hz + f'z  subject to  G z <= g
struct QpProblem {
    Matrix hessian;            // H, symmetric PSD (d x d)
    Vector gradient;           // f (d)
    Matrix constraint_matrix;  // G (c x d)
    Vector constraint_bound;   // g (c)

    [[nodiscard]] int variables() const noexcept { return static_cast<int>(gradient.size()); }
    [[nodiscard]] int constraints() const noexcept {
        return static_cast<int>(constraint_bound.size());
    }

    /// Throws DimensionError on inconsistent shapes.
    void validate() const;

    [[nodiscard]] double objective(const Vector& z) const;
};

enum class QpStatus { optimal, max_iterations, numerical_failure };

[[nodiscard]] const char* to_string(QpStatus status) noexcept;

struct QpSolution {
    Vector z;
    Vector multipliers;  // lambda >= 0, one per inequality row
    double objective = 0.0;
    double primal_residual = 0.0;  // max(0, max_i (G z - g)_i)
    double dual_residual = 0.0;    // ||H z + f + G' lambda||_inf
    int iterations = 0;
    QpStatus status = QpStatus::numerical_failure;
    bool polished = false;
    std::string diagnostic;

    [[nodiscard]] bool optimal() const noexcept { return status == QpStatus::optimal; }
};

struct QpSettings {
    double primal_tolerance = 1e-6;
    double dual_tolerance = 1e-6;
    double complementarity_tolerance = 1e-6;
    int max_iterations = 200;

    // Interior-point internals
    double step_fraction = 0.99;
    double infeasibility_tolerance = 1e-9;

    // Active-set refinement of the interior-point iterate.
    bool polish = true;
    double polish_regularization = 1e-9;
    int polish_refinements = 5;
    int polish_corrections = 10;
};

/// Primal-dual interior-point solve with an active-set polish of the iterate.
///
/// Deterministic for a fixed problem and settings. A non-PSD Hessian or a
/// detected primal infeasibility yields `numerical_failure`; the iteration cap
/// yields `max_iterations` with the last iterate.
[[nodiscard]] QpSolution solve(const QpProblem& problem, const QpSettings& settings = {},
                               const std::optional<Vector>& initial_z = std::nullopt);

/// Certificate residuals of (z, lambda) against the problem data; lambda is
/// clipped at zero before evaluating stationarity.
struct KktResiduals {
    double primal;
    double dual;
    double complementarity;  // max_i |lambda_i (G z - g)_i|
};
[[nodiscard]] KktResiduals kkt_residuals(const QpProblem& problem, const Vector& z,
                                         const Vector& multipliers);

}  // namespace hmpc
