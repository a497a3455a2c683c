#include "hmpc/preview.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

namespace hmpc {

namespace {

Trajectory window(const Trajectory& series, int first, int length, int stride) {
    if (first < 0 || length < 0 || stride < 1) {
        throw std::invalid_argument("invalid preview window");
    }
    if (series.empty()) {
        throw std::invalid_argument("demand series is empty");
    }
    Trajectory out;
    out.reserve(static_cast<std::size_t>(length));
    const long last = static_cast<long>(series.size()) - 1;
    for (int i = 0; i < length; ++i) {
        const long idx = std::min(last, static_cast<long>(first) + static_cast<long>(i) * stride);
        out.push_back(series[static_cast<std::size_t>(idx)]);
    }
    return out;
}

bool parse_double(std::string_view text, double& value) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    return res.ec == std::errc() && res.ptr == end && !text.empty();
}

}  // namespace

void DemandScenario::validate(int demand_dim) const {
    if (duration_steps < 1) {
        throw std::invalid_argument("scenario duration must be >= 1 step");
    }
    for (const auto* series : {&actual, &approximate}) {
        const char* name = series == &actual ? "actual" : "approximate";
        if (static_cast<int>(series->size()) < duration_steps) {
            throw std::invalid_argument(std::string(name) + " demand series has " +
                                        std::to_string(series->size()) +
                                        " entries, fewer than the duration " +
                                        std::to_string(duration_steps));
        }
        for (const auto& d : *series) {
            require_size(std::string(name) + " demand", demand_dim, d.size());
        }
    }
}

Trajectory accurate_preview(const DemandScenario& scenario, int k, int length) {
    return window(scenario.actual, k, length, 1);
}

Trajectory approximate_preview(const DemandScenario& scenario, int k_s, int length, int nu) {
    if (nu < 1) {
        throw std::invalid_argument("nu must be >= 1");
    }
    return window(scenario.approximate, k_s * nu, length, nu);
}

Trajectory load_demand_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open demand file " + path.string());
    }
    Trajectory out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto comma = line.find(',');
        double step = 0.0;
        double value = 0.0;
        const bool ok = comma != std::string::npos &&
                        parse_double(std::string_view(line).substr(0, comma), step) &&
                        parse_double(std::string_view(line).substr(comma + 1), value);
        if (!ok) {
            if (out.empty() && line_no == 1) {
                continue;  // header
            }
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 'step,value'");
        }
        if (step != static_cast<double>(out.size())) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected step " + std::to_string(out.size()));
        }
        out.push_back(Vector::Constant(1, value));
    }
    if (out.empty()) {
        throw std::runtime_error("demand file " + path.string() + " has no samples");
    }
    return out;
}

}  // namespace hmpc
