#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A time-indexed sequence of vectors (states, inputs, demands, references).
using Trajectory = std::vector<Vector>;

/// Raised when an operand has the wrong shape. The message names the operand.
class DimensionError : public std::invalid_argument {
public:
    DimensionError(const std::string& operand, long expected, long actual)
        : std::invalid_argument("dimension mismatch in '" + operand + "': expected " +
                                std::to_string(expected) + ", got " + std::to_string(actual)),
          operand_(operand) {}

    [[nodiscard]] const std::string& operand() const noexcept { return operand_; }

private:
    std::string operand_;
};

inline void require_size(const std::string& operand, long expected, long actual) {
    if (expected != actual) {
        throw DimensionError(operand, expected, actual);
    }
}

}  // namespace hmpc
