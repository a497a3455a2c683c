#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmpc/model.hpp"
#include "hmpc/preview.hpp"
#include "hmpc/types.hpp"

namespace hmpc {

/// Parse or validation problem. `line` is 0 when the problem is not tied to a
/// line of the file (e.g. a cross-field check); `field` is "block.key".
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, std::string field, const std::string& message);
    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    int line_;
    std::string field_;
};

/// Every setting of a case-study experiment. Default-constructed values are
/// the vehicle model, its bounds, H_s = H_p = 20, nu = 5, slack weight 1e6,
/// plus the demand, initial state and reference of the shipped fixture.
struct ExperimentConfig {
    // [model]
    Matrix a;
    Matrix b1;
    Matrix b2;
    double sample_period = 1.0;
    std::vector<bool> slow_mask;

    // [bounds]
    Vector x_lower;
    Vector x_upper;
    Vector u_lower;
    Vector u_upper;
    std::vector<int> soft_rows;  // rows of the interleaved state box

    // [weights]
    double lambda1 = 0.1;  // u1^2
    double lambda2 = 0.1;  // u2^2
    double lambda3 = 1.0;  // (x1 - x1_ref)^2
    double lambda4 = 10.0;  // piloting slow-state tracking
    double lambda_u3 = 0.01;  // u3^2
    double slack_weight = 1e6;

    // [horizons]
    int smpc_horizon = 10;
    int scheduling_horizon = 20;
    int piloting_horizon = 20;
    int nu = 5;

    // [scenario]
    int duration = 120;
    Trajectory actual;
    Trajectory approximate;

    // [initial]
    Vector x0;

    // [reference]: (fine step, x1) breakpoints, linear in between, held outside.
    std::vector<std::pair<double, double>> x1_breakpoints{{0.0, 0.0}, {120.0, 60.0}};

    // [experiment]
    std::vector<std::string> controllers{"smpc", "hmpc", "hmpc-passive", "hmpc-robust"};
    std::filesystem::path output_dir = "out";

    ExperimentConfig();

    /// Throws ConfigError naming the offending field.
    void validate() const;

    [[nodiscard]] LtiModel model() const;
    [[nodiscard]] PolyhedralSet state_set() const;
    [[nodiscard]] PolyhedralSet input_set() const;
    [[nodiscard]] DemandScenario scenario() const;
    /// x1 reference at fine steps 0..steps-1.
    [[nodiscard]] std::vector<double> x1_reference(int steps) const;
};

/// Controller identifiers accepted in `controllers`.
[[nodiscard]] const std::vector<std::string>& known_controllers();

/// Parses the block/key format. Relative CSV paths resolve against `base_dir`.
/// Fields left out keep their defaults. Does not call validate().
[[nodiscard]] ExperimentConfig parse_config(std::string_view text,
                                            const std::filesystem::path& base_dir);

[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace hmpc
