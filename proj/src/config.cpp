#include "hmpc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace hmpc {

namespace {

using json = nlohmann::json;

std::string describe(int line, const std::string& field, const std::string& message) {
    std::string out;
    if (line > 0) {
        out += "line " + std::to_string(line) + ": ";
    }
    if (!field.empty()) {
        out += field + ": ";
    }
    return out + message;
}

// Conversion failures carry only a message; the parser adds line and field.
struct ValueError {
    std::string message;
};

double to_number(const json& v) {
    if (!v.is_number()) {
        throw ValueError{"expected a number, got " + v.dump()};
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ValueError{"value must be finite"};
    }
    return d;
}

int to_int(const json& v) {
    if (!v.is_number_integer()) {
        throw ValueError{"expected an integer, got " + v.dump()};
    }
    const auto i = v.get<long long>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
        throw ValueError{"integer out of range"};
    }
    return static_cast<int>(i);
}

Vector to_vector(const json& v) {
    if (!v.is_array()) {
        throw ValueError{"expected an array of numbers"};
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = to_number(v[i]);
    }
    return out;
}

Matrix to_matrix(const json& v) {
    if (!v.is_array() || v.empty()) {
        throw ValueError{"expected a nonempty array of rows"};
    }
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
        if (!v[r].is_array() || v[r].size() != cols) {
            throw ValueError{"row " + std::to_string(r) + " must be an array of " +
                             std::to_string(cols) + " numbers"};
        }
        out.row(static_cast<Eigen::Index>(r)) = to_vector(v[r]).transpose();
    }
    return out;
}

std::vector<int> to_int_list(const json& v) {
    if (!v.is_array()) {
        throw ValueError{"expected an array of integers"};
    }
    std::vector<int> out;
    for (const auto& e : v) {
        out.push_back(to_int(e));
    }
    return out;
}

std::vector<bool> to_bool_list(const json& v) {
    if (!v.is_array()) {
        throw ValueError{"expected an array of booleans"};
    }
    std::vector<bool> out;
    for (const auto& e : v) {
        if (!e.is_boolean()) {
            throw ValueError{"expected a boolean, got " + e.dump()};
        }
        out.push_back(e.get<bool>());
    }
    return out;
}

std::string to_text(const json& v) {
    if (!v.is_string()) {
        throw ValueError{"expected a string"};
    }
    return v.get<std::string>();
}

// A scalar series [0.4, 0.4, ...] or a vector series [[0.4], [0.4], ...].
Trajectory to_series(const json& v) {
    if (!v.is_array()) {
        throw ValueError{"expected an array"};
    }
    Trajectory out;
    for (const auto& e : v) {
        out.push_back(e.is_array() ? to_vector(e) : Vector::Constant(1, to_number(e)));
    }
    return out;
}

Trajectory load_series(const json& v, const std::filesystem::path& base_dir) {
    std::filesystem::path path = to_text(v);
    if (path.is_relative()) {
        path = base_dir / path;
    }
    if (!std::filesystem::exists(path)) {
        throw ValueError{"file not found: " + path.string()};
    }
    try {
        return load_demand_csv(path);
    } catch (const std::exception& e) {
        throw ValueError{e.what()};
    }
}

using Setter = std::function<void(const json&, ExperimentConfig&, const std::filesystem::path&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"model.A", [](const json& v, ExperimentConfig& c, auto&) { c.a = to_matrix(v); }},
        {"model.B1", [](const json& v, ExperimentConfig& c, auto&) { c.b1 = to_matrix(v); }},
        {"model.B2", [](const json& v, ExperimentConfig& c, auto&) { c.b2 = to_matrix(v); }},
        {"model.T",
         [](const json& v, ExperimentConfig& c, auto&) { c.sample_period = to_number(v); }},
        {"model.slow_mask",
         [](const json& v, ExperimentConfig& c, auto&) { c.slow_mask = to_bool_list(v); }},
        {"bounds.x_lower",
         [](const json& v, ExperimentConfig& c, auto&) { c.x_lower = to_vector(v); }},
        {"bounds.x_upper",
         [](const json& v, ExperimentConfig& c, auto&) { c.x_upper = to_vector(v); }},
        {"bounds.u_lower",
         [](const json& v, ExperimentConfig& c, auto&) { c.u_lower = to_vector(v); }},
        {"bounds.u_upper",
         [](const json& v, ExperimentConfig& c, auto&) { c.u_upper = to_vector(v); }},
        {"bounds.soft_rows",
         [](const json& v, ExperimentConfig& c, auto&) { c.soft_rows = to_int_list(v); }},
        {"weights.lambda1",
         [](const json& v, ExperimentConfig& c, auto&) { c.lambda1 = to_number(v); }},
        {"weights.lambda2",
         [](const json& v, ExperimentConfig& c, auto&) { c.lambda2 = to_number(v); }},
        {"weights.lambda3",
         [](const json& v, ExperimentConfig& c, auto&) { c.lambda3 = to_number(v); }},
        {"weights.lambda4",
         [](const json& v, ExperimentConfig& c, auto&) { c.lambda4 = to_number(v); }},
        {"weights.lambda_u3",
         [](const json& v, ExperimentConfig& c, auto&) { c.lambda_u3 = to_number(v); }},
        {"weights.slack_weight",
         [](const json& v, ExperimentConfig& c, auto&) { c.slack_weight = to_number(v); }},
        {"horizons.N",
         [](const json& v, ExperimentConfig& c, auto&) { c.smpc_horizon = to_int(v); }},
        {"horizons.H_s",
         [](const json& v, ExperimentConfig& c, auto&) { c.scheduling_horizon = to_int(v); }},
        {"horizons.H_p",
         [](const json& v, ExperimentConfig& c, auto&) { c.piloting_horizon = to_int(v); }},
        {"horizons.nu", [](const json& v, ExperimentConfig& c, auto&) { c.nu = to_int(v); }},
        {"scenario.duration",
         [](const json& v, ExperimentConfig& c, auto&) { c.duration = to_int(v); }},
        {"scenario.actual",
         [](const json& v, ExperimentConfig& c, auto&) { c.actual = to_series(v); }},
        {"scenario.approximate",
         [](const json& v, ExperimentConfig& c, auto&) { c.approximate = to_series(v); }},
        {"scenario.actual_csv",
         [](const json& v, ExperimentConfig& c, const std::filesystem::path& base) {
             c.actual = load_series(v, base);
         }},
        {"scenario.approximate_csv",
         [](const json& v, ExperimentConfig& c, const std::filesystem::path& base) {
             c.approximate = load_series(v, base);
         }},
        {"initial.x0", [](const json& v, ExperimentConfig& c, auto&) { c.x0 = to_vector(v); }},
        {"reference.x1_breakpoints",
         [](const json& v, ExperimentConfig& c, auto&) {
             const Matrix m = to_matrix(v);
             if (m.cols() != 2) {
                 throw ValueError{"expected [step, x1] pairs"};
             }
             c.x1_breakpoints.clear();
             for (Eigen::Index r = 0; r < m.rows(); ++r) {
                 c.x1_breakpoints.emplace_back(m(r, 0), m(r, 1));
             }
         }},
        {"experiment.controllers",
         [](const json& v, ExperimentConfig& c, auto&) {
             if (!v.is_array()) {
                 throw ValueError{"expected an array of controller names"};
             }
             c.controllers.clear();
             for (const auto& e : v) {
                 c.controllers.push_back(to_text(e));
             }
         }},
        {"experiment.output_dir",
         [](const json& v, ExperimentConfig& c, auto&) { c.output_dir = to_text(v); }},
    };
    return table;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Bracket depth outside string literals; a value continues on the next line
// while it is positive.
int bracket_balance(std::string_view s) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (char ch : s) {
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (ch == '\\') {
                escaped = true;
            } else if (ch == '"') {
                in_string = false;
            }
            continue;
        }
        if (ch == '"') {
            in_string = true;
        } else if (ch == '[' || ch == '{') {
            ++depth;
        } else if (ch == ']' || ch == '}') {
            --depth;
        }
    }
    return depth;
}

// Demand fixture: 0.4 baseline, pulses of 3.0 on steps 10-40 and 70-85; the
// forecast only knows the baseline.
void fixture_demand(ExperimentConfig& c) {
    c.actual.clear();
    c.approximate.clear();
    for (int k = 0; k <= c.duration; ++k) {
        const bool pulse = (k >= 10 && k <= 40) || (k >= 70 && k <= 85);
        c.actual.push_back(Vector::Constant(1, pulse ? 3.0 : 0.4));
        c.approximate.push_back(Vector::Constant(1, 0.4));
    }
}

}  // namespace

ConfigError::ConfigError(int line, std::string field, const std::string& message)
    : std::runtime_error(describe(line, field, message)), line_(line), field_(std::move(field)) {}

ExperimentConfig::ExperimentConfig() {
    const LtiModel m = vehicle_thermal_model();
    a = m.a();
    b1 = m.b_control();
    b2 = m.b_demand();
    sample_period = m.sample_period();
    slow_mask = m.slow_mask();
    x_lower = Eigen::Vector4d(-1, -20, 0, 0);
    x_upper = Eigen::Vector4d(100, 20, 100, 30);
    u_lower = Vector::Constant(3, -1.0);
    u_upper = Vector::Constant(3, 1.0);
    soft_rows = {box_upper_row(0), box_lower_row(0), box_upper_row(3)};
    x0 = Eigen::Vector4d(0, 0, 100, 29);
    fixture_demand(*this);
}

const std::vector<std::string>& known_controllers() {
    static const std::vector<std::string> names{"smpc", "hmpc", "hmpc-passive", "hmpc-robust"};
    return names;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
        throw ConfigError(0, field, msg);
    };
    const auto n = a.rows();
    if (n < 1 || a.cols() != n) {
        fail("model.A", "must be a nonempty square matrix");
    }
    if (b1.rows() != n || b1.cols() < 1) {
        fail("model.B1", "must have " + std::to_string(n) + " rows");
    }
    if (b2.rows() != n || b2.cols() < 1) {
        fail("model.B2", "must have " + std::to_string(n) + " rows");
    }
    if (!(sample_period > 0.0)) {
        fail("model.T", "must be positive");
    }
    if (static_cast<Eigen::Index>(slow_mask.size()) != n) {
        fail("model.slow_mask", "must have one entry per state");
    }
    if (std::none_of(slow_mask.begin(), slow_mask.end(), [](bool b) { return b; })) {
        fail("model.slow_mask", "must mark at least one slow state");
    }
    if (n != 4 || b1.cols() != 3 || b2.cols() != 1) {
        fail("model", "the case-study trace schema needs 4 states, 3 inputs and 1 demand");
    }
    if (x_lower.size() != n || x_upper.size() != n) {
        fail("bounds.x_lower", "state bounds must have one entry per state");
    }
    if ((x_lower.array() > x_upper.array()).any()) {
        fail("bounds.x_lower", "exceeds bounds.x_upper");
    }
    if (u_lower.size() != b1.cols() || u_upper.size() != b1.cols()) {
        fail("bounds.u_lower", "input bounds must have one entry per input");
    }
    if ((u_lower.array() > u_upper.array()).any()) {
        fail("bounds.u_lower", "exceeds bounds.u_upper");
    }
    std::set<int> seen;
    for (int r : soft_rows) {
        if (r < 0 || r >= 2 * n) {
            fail("bounds.soft_rows", "row " + std::to_string(r) + " outside [0, " +
                                         std::to_string(2 * n) + ")");
        }
        if (!seen.insert(r).second) {
            fail("bounds.soft_rows", "row " + std::to_string(r) + " listed twice");
        }
    }
    const std::pair<const char*, double> weights[] = {
        {"weights.lambda1", lambda1}, {"weights.lambda2", lambda2},
        {"weights.lambda3", lambda3}, {"weights.lambda4", lambda4},
        {"weights.lambda_u3", lambda_u3}};
    for (const auto& [name, w] : weights) {
        if (!(w >= 0.0)) {
            fail(name, "must be nonnegative");
        }
    }
    if (!(slack_weight > 0.0)) {
        fail("weights.slack_weight", "must be positive");
    }
    const std::pair<const char*, int> horizons[] = {{"horizons.N", smpc_horizon},
                                                    {"horizons.H_s", scheduling_horizon},
                                                    {"horizons.H_p", piloting_horizon},
                                                    {"horizons.nu", nu}};
    for (const auto& [name, h] : horizons) {
        if (h < 1) {
            fail(name, "must be >= 1");
        }
    }
    if (duration < 1) {
        fail("scenario.duration", "must be >= 1");
    }
    for (const auto& [name, series] : {std::pair{"scenario.actual", &actual},
                                       std::pair{"scenario.approximate", &approximate}}) {
        if (static_cast<int>(series->size()) < duration) {
            fail(name, "has " + std::to_string(series->size()) + " entries, fewer than duration " +
                           std::to_string(duration));
        }
        for (const auto& d : *series) {
            if (d.size() != b2.cols()) {
                fail(name, "entries must have " + std::to_string(b2.cols()) + " components");
            }
        }
    }
    if (x0.size() != n) {
        fail("initial.x0", "must have one entry per state");
    }
    if (x1_breakpoints.empty()) {
        fail("reference.x1_breakpoints", "needs at least one breakpoint");
    }
    for (std::size_t i = 1; i < x1_breakpoints.size(); ++i) {
        if (!(x1_breakpoints[i].first > x1_breakpoints[i - 1].first)) {
            fail("reference.x1_breakpoints", "steps must be strictly increasing");
        }
    }
    if (controllers.empty()) {
        fail("experiment.controllers", "must name at least one controller");
    }
    std::set<std::string> names;
    for (const auto& c : controllers) {
        const auto& known = known_controllers();
        if (std::find(known.begin(), known.end(), c) == known.end()) {
            fail("experiment.controllers", "unknown controller '" + c + "'");
        }
        if (!names.insert(c).second) {
            fail("experiment.controllers", "controller '" + c + "' listed twice");
        }
    }
    if (output_dir.empty()) {
        fail("experiment.output_dir", "must not be empty");
    }
}

LtiModel ExperimentConfig::model() const {
    return {a, b1, b2, sample_period, slow_mask};
}

PolyhedralSet ExperimentConfig::state_set() const { return PolyhedralSet::box(x_lower, x_upper); }

PolyhedralSet ExperimentConfig::input_set() const { return PolyhedralSet::box(u_lower, u_upper); }

DemandScenario ExperimentConfig::scenario() const {
    DemandScenario s;
    s.actual = actual;
    s.approximate = approximate;
    s.duration_steps = duration;
    return s;
}

std::vector<double> ExperimentConfig::x1_reference(int steps) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(steps, 0)));
    for (int k = 0; k < steps; ++k) {
        const double t = k;
        if (t <= x1_breakpoints.front().first) {
            out.push_back(x1_breakpoints.front().second);
            continue;
        }
        if (t >= x1_breakpoints.back().first) {
            out.push_back(x1_breakpoints.back().second);
            continue;
        }
        const auto hi = std::upper_bound(
            x1_breakpoints.begin(), x1_breakpoints.end(), t,
            [](double v, const std::pair<double, double>& b) { return v < b.first; });
        const auto lo = hi - 1;
        const double w = (t - lo->first) / (hi->first - lo->first);
        out.push_back(lo->second + w * (hi->second - lo->second));
    }
    return out;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    std::set<std::string> blocks;
    for (const auto& [key, _] : setters()) {
        blocks.insert(key.substr(0, key.find('.')));
    }

    std::istringstream in{std::string(text)};
    std::string block;
    std::set<std::string> assigned;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view content = trim(line);
        if (content.empty() || content.front() == '#' || content.front() == ';') {
            continue;
        }
        if (content.front() == '[' && content.back() == ']' &&
            content.find('=') == std::string_view::npos) {
            block = std::string(trim(content.substr(1, content.size() - 2)));
            if (!blocks.contains(block)) {
                throw ConfigError(line_no, block, "unknown block");
            }
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(line_no, "", "expected 'key = value' or '[block]'");
        }
        const std::string key(trim(content.substr(0, eq)));
        if (block.empty()) {
            throw ConfigError(line_no, key, "key outside of a block");
        }
        const std::string field = block + "." + key;
        const auto setter = setters().find(field);
        if (setter == setters().end()) {
            throw ConfigError(line_no, field, "unknown key");
        }
        if (!assigned.insert(field).second) {
            throw ConfigError(line_no, field, "assigned twice");
        }

        const int start = line_no;
        std::string value(trim(content.substr(eq + 1)));
        while (bracket_balance(value) > 0 && std::getline(in, line)) {
            ++line_no;
            value += ' ';
            value += trim(line);
        }
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error& e) {
            throw ConfigError(start, field, std::string("malformed value: ") + e.what());
        }
        try {
            setter->second(parsed, cfg, base_dir);
        } catch (const ValueError& e) {
            throw ConfigError(start, field, e.message);
        }
    }

    // A duration given without series regenerates the fixture at that length.
    if (assigned.contains("scenario.duration")) {
        const bool has_actual =
            assigned.contains("scenario.actual") || assigned.contains("scenario.actual_csv");
        const bool has_approx = assigned.contains("scenario.approximate") ||
                                assigned.contains("scenario.approximate_csv");
        if (!has_actual && !has_approx) {
            fixture_demand(cfg);
        }
    }
    for (const char* name : {"actual", "approximate"}) {
        const std::string inline_key = std::string("scenario.") + name;
        if (assigned.contains(inline_key) && assigned.contains(inline_key + "_csv")) {
            throw ConfigError(0, inline_key, "given both inline and as a CSV file");
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(0, "", "cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

}  // namespace hmpc
