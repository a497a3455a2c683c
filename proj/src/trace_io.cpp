#include "hmpc/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace hmpc {

namespace {

constexpr int kPosition = 0;
constexpr int kThermal = 3;

bool is_upper_row(const PolyhedralSet& set, int row, int coordinate) {
    const auto c = set.row_coordinate(row);
    return c && *c == coordinate && set.p()(row, coordinate) > 0.0;
}

double max_slack(const Vector& slacks, const PolyhedralSet& set,
                 const std::vector<int>& soft_rows, int coordinate) {
    double out = 0.0;
    for (std::size_t i = 0; i < soft_rows.size() && static_cast<Eigen::Index>(i) < slacks.size();
         ++i) {
        const auto c = set.row_coordinate(soft_rows[i]);
        if (c && *c == coordinate) {
            out = std::max(out, slacks(static_cast<Eigen::Index>(i)));
        }
    }
    return out;
}

void put(std::ostream& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

std::runtime_error bad_line(int line, const std::string& what) {
    return std::runtime_error("trace csv line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_field(std::string_view field, int line, std::string_view column) {
    T value{};
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw bad_line(line, "bad value '" + std::string(field) + "' in column " +
                                 std::string(column));
    }
    return value;
}

}  // namespace

TraceTable tabulate(const SimTrace& trace, const PolyhedralSet& state_set,
                    const std::vector<int>& soft_rows) {
    require_size("state_set.dim", 4, state_set.dim());
    std::vector<int> upper_rows;
    for (int r = 0; r < state_set.rows(); ++r) {
        if (is_upper_row(state_set, r, kThermal)) {
            upper_rows.push_back(r);
        }
    }

    TraceTable table;
    table.rows.reserve(trace.records.size());
    for (const auto& rec : trace.records) {
        require_size("trace state", 4, rec.state.size());
        require_size("trace input", 3, rec.input.size());
        require_size("trace demand", 1, rec.demand.size());
        TraceRow row;
        row.step = rec.step;
        row.time = rec.time;
        for (int i = 0; i < 4; ++i) {
            row.x[i] = rec.state(i);
        }
        for (int i = 0; i < 3; ++i) {
            row.u[i] = rec.input(i);
        }
        row.u_hat = rec.demand(0);

        const Vector& q = rec.state_bound.size() == state_set.rows() ? rec.state_bound
                                                                     : state_set.q();
        row.x4_bound_eff = std::numeric_limits<double>::infinity();
        for (int r : upper_rows) {
            row.x4_bound_eff = std::min(row.x4_bound_eff, q(r) / state_set.p()(r, kThermal));
        }
        row.slack_x1 = max_slack(rec.slacks, state_set, soft_rows, kPosition);
        row.slack_x4 = max_slack(rec.slacks, state_set, soft_rows, kThermal);
        row.sched_solve = rec.scheduled;
        row.qp_iters = rec.qp_iterations;
        table.rows.push_back(row);
    }
    if (trace.failed) {
        table.failure = trace.failure;
    }
    return table;
}

void write_trace_csv(std::ostream& out, const TraceTable& table) {
    out << trace_csv_header << '\n';
    for (const auto& r : table.rows) {
        out << r.step << ',';
        put(out, r.time);
        for (double v : r.x) {
            out << ',';
            put(out, v);
        }
        for (double v : r.u) {
            out << ',';
            put(out, v);
        }
        for (double v : {r.u_hat, r.x4_bound_eff, r.slack_x1, r.slack_x4}) {
            out << ',';
            put(out, v);
        }
        out << ',' << (r.sched_solve ? 1 : 0) << ',' << r.qp_iters << '\n';
    }
    if (table.failure) {
        std::string msg = *table.failure;
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << "# failure: " << msg << '\n';
    }
}

TraceTable read_trace_csv(std::istream& in) {
    static constexpr std::string_view failure_prefix = "# failure: ";
    static constexpr std::string_view columns[] = {
        "step", "time", "x1",    "x2",           "x3",       "x4",       "u1",          "u2",
        "u3",   "u_hat", "x4_bound_eff", "slack_x1", "slack_x4", "sched_solve", "qp_iters"};

    TraceTable table;
    std::string line;
    int line_no = 1;
    if (!std::getline(in, line) || line != trace_csv_header) {
        throw bad_line(line_no, "header does not match the trace schema");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (table.failure) {
            throw bad_line(line_no, "content after the failure marker");
        }
        if (line.starts_with(failure_prefix)) {
            table.failure = line.substr(failure_prefix.size());
            continue;
        }
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        for (;;) {
            const auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() != std::size(columns)) {
            throw bad_line(line_no, "expected " + std::to_string(std::size(columns)) +
                                        " fields, got " + std::to_string(fields.size()));
        }
        TraceRow row;
        std::size_t c = 0;
        auto next_double = [&] {
            const auto v = parse_field<double>(fields[c], line_no, columns[c]);
            ++c;
            return v;
        };
        row.step = parse_field<int>(fields[c], line_no, columns[c]);
        ++c;
        row.time = next_double();
        for (double& v : row.x) {
            v = next_double();
        }
        for (double& v : row.u) {
            v = next_double();
        }
        row.u_hat = next_double();
        row.x4_bound_eff = next_double();
        row.slack_x1 = next_double();
        row.slack_x4 = next_double();
        const int sched = parse_field<int>(fields[c], line_no, columns[c]);
        if (sched != 0 && sched != 1) {
            throw bad_line(line_no, "sched_solve must be 0 or 1");
        }
        row.sched_solve = sched == 1;
        ++c;
        row.qp_iters = parse_field<int>(fields[c], line_no, columns[c]);
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace hmpc
