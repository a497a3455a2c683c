#pragma once

#include <filesystem>

#include "hmpc/types.hpp"

namespace hmpc {

/// Demand at the fine period in two fidelities: what the plant will see
/// (`actual`) and the long-range forecast (`approximate`).
struct DemandScenario {
    Trajectory actual;
    Trajectory approximate;
    int duration_steps = 0;

    /// Throws if either series is shorter than the duration or an entry does
    /// not have `demand_dim` components.
    void validate(int demand_dim) const;
};

/// actual[k .. k+length-1], holding the last entry past the end of the series.
[[nodiscard]] Trajectory accurate_preview(const DemandScenario& scenario, int k, int length);

/// approximate[k_s*nu], approximate[(k_s+1)*nu], ... (`length` entries), hold-last.
[[nodiscard]] Trajectory approximate_preview(const DemandScenario& scenario, int k_s, int length,
                                             int nu);

/// Scalar series from a two-column `step,value` CSV. An optional header line
/// is skipped; steps must run 0, 1, 2, ... without gaps.
[[nodiscard]] Trajectory load_demand_csv(const std::filesystem::path& path);

}  // namespace hmpc
