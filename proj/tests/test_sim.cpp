#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hmpc/experiment.hpp"
#include "hmpc/sim.hpp"
#include "hmpc/trace_io.hpp"
#include "oracles.hpp"

using hmpc::Trajectory;
using hmpc::Vector;

namespace {

// Applies a fixed input and fails on request.
class ScriptedController final : public hmpc::Controller {
public:
    ScriptedController(Vector u, int fail_at) : u_(std::move(u)), fail_at_(fail_at) {}
    hmpc::ControlStep step(int k, const Vector&, const hmpc::DemandScenario&) override {
        if (k == fail_at_) throw hmpc::SolverError("scripted failure", hmpc::QpStatus::max_iterations);
        hmpc::ControlStep cs;
        cs.input = u_;
        cs.state_bound = hmpc::vehicle_state_bounds().q();
        cs.slacks = Vector::Zero(3);
        cs.qp_iterations = k;
        return cs;
    }

private:
    Vector u_;
    int fail_at_;
};

hmpc::SimTrace constant_x4_trace(double x4, int steps) {
    hmpc::SimTrace t;
    for (int k = 0; k < steps; ++k) {
        hmpc::SimRecord r;
        r.step = k;
        r.time = k;
        r.state = Eigen::Vector4d(0, 0, 100, x4);
        r.input = Vector::Zero(3);
        r.demand = Vector::Zero(1);
        t.records.push_back(r);
    }
    return t;
}

hmpc::MetricSpec flat_reference() {
    hmpc::MetricSpec spec;
    spec.x1_reference = {0.0};
    return spec;
}

// Short fixture variant so that closed-loop tests stay fast.
hmpc::ExperimentConfig short_config(int duration) {
    hmpc::ExperimentConfig c;
    c.duration = duration;
    c.smpc_horizon = 10;
    return c;
}

void check_recurrence(const hmpc::SimTrace& trace) {
    const auto model = hmpc::vehicle_thermal_model();
    for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
        const auto& r = trace.records[k];
        const Vector next = oracle::step_elementwise(model.a(), model.b_control(),
                                                     model.b_demand(), r.state, r.input, r.demand);
        CHECK((trace.records[k + 1].state - next).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

}  // namespace

TEST_CASE("metrics on hand-computed traces") {
    const auto hot = hmpc::compute_metrics(constant_x4_trace(31.0, 10), flat_reference());
    CHECK(hot.cumulative_x4_violation == doctest::Approx(10.0));
    CHECK(hot.peak_x4_violation == doctest::Approx(1.0));

    const auto calm = hmpc::compute_metrics(constant_x4_trace(25.0, 10), flat_reference());
    CHECK(calm.cumulative_x4_violation == 0.0);
    CHECK(calm.peak_x4_violation == 0.0);
    CHECK(calm.position_rms_error == 0.0);
    CHECK(calm.energy_consumed == 0.0);
    CHECK(calm.x1_bound_violations == 0);

    auto drain = constant_x4_trace(25.0, 3);
    drain.records[1].state(2) = 96.0;
    drain.records[2].state(2) = 92.0;
    CHECK(hmpc::compute_metrics(drain, flat_reference()).energy_consumed == doctest::Approx(8.0));

    auto half_period = flat_reference();
    half_period.period = 0.5;
    CHECK(hmpc::compute_metrics(constant_x4_trace(31.0, 10), half_period)
              .cumulative_x4_violation == doctest::Approx(5.0));

    auto off = constant_x4_trace(25.0, 4);
    off.records[1].state(0) = -1.5;
    off.records[3].state(0) = 2.0;
    const auto m = hmpc::compute_metrics(off, flat_reference());
    CHECK(m.x1_bound_violations == 1);
    CHECK(m.position_rms_error == doctest::Approx(std::sqrt((2.25 + 4.0) / 4.0)));

    CHECK_THROWS_AS((void)hmpc::compute_metrics(hmpc::SimTrace{}, flat_reference()),
                    std::invalid_argument);
}

TEST_CASE("equilibrium: zero demand at the reference leaves the state put") {
    auto c = short_config(15);
    c.actual = Trajectory(16, Vector::Zero(1));
    c.approximate = c.actual;
    c.x0 = Eigen::Vector4d(0, 0, 50, 20);
    c.x1_breakpoints = {{0.0, 0.0}};
    for (const auto& variant : hmpc::known_controllers()) {
        const auto run = hmpc::run_variant(c, variant);
        REQUIRE_FALSE(run.trace.failed);
        for (const auto& r : run.trace.records) {
            CHECK((r.state - c.x0).cwiseAbs().maxCoeff() < 1e-6);
        }
        CHECK(run.metrics.cumulative_x4_violation == 0.0);
        CHECK(run.metrics.position_rms_error < 1e-6);
        CHECK(std::abs(run.metrics.energy_consumed) < 1e-6);
    }
}

TEST_CASE("one-step run has two records obeying the recurrence") {
    const auto c = short_config(1);
    auto controller = hmpc::make_controller(c, "hmpc");
    const auto trace = hmpc::run(c.model(), *controller, c.scenario(), c.x0, 1);
    REQUIRE(trace.records.size() == 2);
    CHECK(trace.records[0].scheduled);
    CHECK(trace.records[1].input.isZero(0.0));
    check_recurrence(trace);
}

TEST_CASE("every variant obeys the plant recurrence and the energy balance") {
    const auto c = short_config(40);
    for (const auto& variant : hmpc::known_controllers()) {
        const auto run = hmpc::run_variant(c, variant);
        REQUIRE_FALSE(run.trace.failed);
        REQUIRE(run.trace.records.size() == 41);
        check_recurrence(run.trace);
        for (std::size_t k = 0; k + 1 < run.trace.records.size(); ++k) {
            const auto& r = run.trace.records[k];
            const double drop = 0.8 * (r.input(0) - r.input(1)) + 0.15 * r.input(2) +
                                0.25 * r.demand(0);
            CHECK(r.state(2) - run.trace.records[k + 1].state(2) ==
                  doctest::Approx(drop).epsilon(1e-9).scale(1.0));
            CHECK(r.demand == c.actual[k]);
        }
    }
}

TEST_CASE("repeated runs are bitwise identical") {
    const auto c = short_config(30);
    for (const char* variant : {"smpc", "hmpc-robust"}) {
        const auto a = hmpc::run_variant(c, variant);
        const auto b = hmpc::run_variant(c, variant);
        REQUIRE(a.trace.records.size() == b.trace.records.size());
        for (std::size_t k = 0; k < a.trace.records.size(); ++k) {
            CHECK(a.trace.records[k].state == b.trace.records[k].state);
            CHECK(a.trace.records[k].input == b.trace.records[k].input);
        }
    }
}

TEST_CASE("a solver failure truncates the trace with a marker") {
    const auto c = short_config(10);
    ScriptedController controller(Eigen::Vector3d(0.1, 0.0, 0.2), 3);
    const auto trace = hmpc::run(c.model(), controller, c.scenario(), c.x0, 10);
    CHECK(trace.failed);
    CHECK(trace.failure.find("step 3") != std::string::npos);
    REQUIRE(trace.records.size() == 4);
    CHECK(trace.records.back().input.isZero(0.0));
    check_recurrence(trace);
}

TEST_CASE("run rejects a duration beyond the scenario") {
    const auto c = short_config(10);
    ScriptedController controller(Vector::Zero(3), -1);
    CHECK_THROWS_AS((void)hmpc::run(c.model(), controller, c.scenario(), c.x0, 11),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)hmpc::run(c.model(), controller, c.scenario(), Vector::Zero(3), 5),
                    hmpc::DimensionError);
}

TEST_CASE("tabulate maps bounds and slacks onto the schema columns") {
    const auto c = short_config(45);
    const auto run = hmpc::run_variant(c, "hmpc-robust");
    const auto table = hmpc::tabulate(c, run.trace);
    REQUIRE(table.rows.size() == run.trace.records.size());
    bool tightened = false;
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const auto& row = table.rows[k];
        const auto& rec = run.trace.records[k];
        CHECK(row.step == rec.step);
        CHECK(row.x[3] == rec.state(3));
        CHECK(row.u_hat == rec.demand(0));
        CHECK(row.x4_bound_eff <= 30.0);
        tightened = tightened || row.x4_bound_eff < 30.0;
        if (rec.slacks.size() == 3) {
            CHECK(row.slack_x1 == std::max(rec.slacks(0), rec.slacks(1)));
            CHECK(row.slack_x4 == rec.slacks(2));
        }
        CHECK(row.sched_solve == rec.scheduled);
    }
    CHECK(tightened);
}

TEST_CASE("trace CSV round-trips exactly") {
    const auto c = short_config(20);
    const auto table = hmpc::tabulate(c, hmpc::run_variant(c, "hmpc").trace);
    std::stringstream buf;
    hmpc::write_trace_csv(buf, table);
    const std::string text = buf.str();
    CHECK(text.substr(0, text.find('\n')) == hmpc::trace_csv_header);
    std::istringstream in(text);
    CHECK(hmpc::read_trace_csv(in) == table);
}

TEST_CASE("trace CSV round-trips random rows and failure markers") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int trial = 0; trial < 50; ++trial) {
        hmpc::TraceTable t;
        const int n = static_cast<int>(rng() % 6);
        for (int k = 0; k < n; ++k) {
            hmpc::TraceRow r;
            r.step = k;
            r.time = u(rng);
            for (double& v : r.x) v = u(rng) * std::pow(10.0, double(rng() % 30) - 15.0);
            for (double& v : r.u) v = u(rng);
            r.u_hat = u(rng);
            r.x4_bound_eff = u(rng);
            r.slack_x1 = std::abs(u(rng)) * 1e-12;
            r.slack_x4 = 0.1;
            r.sched_solve = rng() % 2 == 0;
            r.qp_iters = static_cast<int>(rng() % 100);
            t.rows.push_back(r);
        }
        if (rng() % 2 == 0) t.failure = "step 4: MPC QP not solved: max_iterations";
        std::stringstream buf;
        hmpc::write_trace_csv(buf, t);
        CHECK(hmpc::read_trace_csv(buf) == t);
    }
}

TEST_CASE("trace CSV reader diagnostics") {
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return hmpc::read_trace_csv(in);
    };
    const std::string header(hmpc::trace_csv_header);
    CHECK_THROWS_WITH(parse("step,time\n"), doctest::Contains("line 1"));
    CHECK_THROWS_WITH(parse(header + "\n0,0,1,2,3,4,5,6,7,8,9,10,11,1\n"),
                      doctest::Contains("line 2"));
    CHECK_THROWS_WITH(parse(header + "\n0,0,1,2,3,x,5,6,7,8,9,10,11,1,3\n"),
                      doctest::Contains("x4"));
    CHECK_THROWS_WITH(parse(header + "\n0,0,1,2,3,4,5,6,7,8,9,10,11,2,3\n"),
                      doctest::Contains("sched_solve"));
    CHECK_THROWS(parse(header + "\n# failure: boom\n0,0,1,2,3,4,5,6,7,8,9,10,11,1,3\n"));
    CHECK(parse(header + "\n").rows.empty());
}
