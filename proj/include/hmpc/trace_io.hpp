#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hmpc/model.hpp"
#include "hmpc/sim.hpp"

namespace hmpc {

inline constexpr std::string_view trace_csv_header =
    "step,time,x1,x2,x3,x4,u1,u2,u3,u_hat,x4_bound_eff,slack_x1,slack_x4,sched_solve,qp_iters";

/// One CSV line of the vehicle trace schema.
struct TraceRow {
    int step = 0;
    double time = 0.0;
    std::array<double, 4> x{};
    std::array<double, 3> u{};
    double u_hat = 0.0;
    double x4_bound_eff = 0.0;
    double slack_x1 = 0.0;
    double slack_x4 = 0.0;
    bool sched_solve = false;
    int qp_iters = 0;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// The CSV view of a run. `failure` is written as a trailing `# failure:` line.
struct TraceTable {
    std::vector<TraceRow> rows;
    std::optional<std::string> failure;

    friend bool operator==(const TraceTable&, const TraceTable&) = default;
};

/// Projects a vehicle run onto the CSV columns. The effective x4 bound is the
/// tightest right-hand side among the x4-upper rows of `state_set` (nominal
/// values when a record carries none); slack columns take the largest slack of
/// the softened rows on x1 and x4.
[[nodiscard]] TraceTable tabulate(const SimTrace& trace, const PolyhedralSet& state_set,
                                  const std::vector<int>& soft_rows);

/// Doubles are written in shortest round-trip form, so read(write(t)) == t.
void write_trace_csv(std::ostream& out, const TraceTable& table);

/// Throws std::runtime_error naming the line on a malformed file.
[[nodiscard]] TraceTable read_trace_csv(std::istream& in);

}  // namespace hmpc
