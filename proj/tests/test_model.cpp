#include <doctest.h>

#include <random>

#include "hmpc/model.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using hmpc::LtiModel;
using hmpc::Matrix;
using hmpc::Vector;
using gen::random_matrix;

namespace {

// Brute-force sum_{j<nu} A^j B via explicit powers.
Matrix summed_powers(const Matrix& a, const Matrix& b, int nu) {
    Matrix total = Matrix::Zero(b.rows(), b.cols());
    for (int j = 0; j < nu; ++j) {
        Matrix p = Matrix::Identity(a.rows(), a.cols());
        for (int k = 0; k < j; ++k) p = p * a;
        total += p * b;
    }
    return total;
}

}  // namespace

TEST_CASE("vehicle step matches elementwise arithmetic") {
    const auto model = hmpc::vehicle_thermal_model();
    const Vector x = Eigen::Vector4d(0, 0, 100, 25);
    const Vector u = Eigen::Vector3d(0.5, 0, 0);
    const Vector d = Vector::Constant(1, 1.0);
    const Vector next = model.step(x, u, d);
    const Vector expected = Eigen::Vector4d(0.5, 0.5, 99.35, 26.5);
    CHECK((next - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
    const Vector brute =
        oracle::step_elementwise(model.a(), model.b_control(), model.b_demand(), x, u, d);
    CHECK((next - brute).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("zero and identity steps") {
    const auto model = hmpc::vehicle_thermal_model();
    CHECK(model.step(Vector::Zero(4), Vector::Zero(3), Vector::Zero(1)).isZero(0.0));

    const LtiModel ident(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(2, 1), 1.0,
                         {false, true});
    const Vector x = Eigen::Vector2d(1, 2);
    CHECK(ident.step(x, Vector::Zero(1), Vector::Zero(1)) == x);
}

TEST_CASE("step names the offending operand") {
    const auto model = hmpc::vehicle_thermal_model();
    try {
        (void)model.step(Vector::Zero(4), Vector::Zero(2), Vector::Zero(1));
        FAIL("expected DimensionError");
    } catch (const hmpc::DimensionError& e) {
        CHECK(e.operand() == "u");
    }
}

TEST_CASE("model construction validates shapes and period") {
    CHECK_THROWS_AS(LtiModel(Matrix::Identity(2, 2), Matrix::Zero(3, 1), Matrix::Zero(2, 1), 1.0,
                             {false, false}),
                    hmpc::DimensionError);
    CHECK_THROWS_AS(LtiModel(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(2, 1), 1.0,
                             {false}),
                    hmpc::DimensionError);
    CHECK_THROWS_AS(LtiModel(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(2, 1), 0.0,
                             {false, false}),
                    std::invalid_argument);
}

TEST_CASE("downsampled vehicle matrices") {
    const auto model = hmpc::vehicle_thermal_model();
    const auto coarse = hmpc::downsample(model, 5);

    Matrix a_expected(4, 4);
    a_expected << 1, 5, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
    Matrix b1_expected(4, 3);
    b1_expected << 15, -5, 0, 5, -5, 0, -4, 4, -0.75, 5, 5, -4.25;
    Vector b2_expected = Eigen::Vector4d(0, 0, -1.25, 5);

    CHECK((coarse.a() - a_expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((coarse.b_control() - b1_expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((coarse.b_demand() - b2_expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(coarse.sample_period() == 5.0);
    CHECK(coarse.slow_mask() == model.slow_mask());

    CHECK((coarse.b_control() - summed_powers(model.a(), model.b_control(), 5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("downsample by one is the identity and zero is rejected") {
    const auto model = hmpc::vehicle_thermal_model();
    const auto same = hmpc::downsample(model, 1);
    CHECK(same.a() == model.a());
    CHECK(same.b_control() == model.b_control());
    CHECK(same.b_demand() == model.b_demand());
    CHECK(same.sample_period() == model.sample_period());
    CHECK_THROWS_AS((void)hmpc::downsample(model, 0), std::invalid_argument);
}

TEST_CASE("coarse step equals nu fine steps (randomized)") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_int_distribution<int> rate(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = dim(rng), m = dim(rng), h = dim(rng), nu = rate(rng);
        const LtiModel model(random_matrix(rng, n, n, 0.6), random_matrix(rng, n, m, 1.0),
                             random_matrix(rng, n, h, 1.0), 0.5, std::vector<bool>(n, false));
        const auto coarse = hmpc::downsample(model, nu);
        const Vector x0 = random_matrix(rng, n, 1, 5.0);
        const Vector u = random_matrix(rng, m, 1, 1.0);
        const Vector d = random_matrix(rng, h, 1, 1.0);
        Vector x = x0;
        for (int k = 0; k < nu; ++k) x = model.step(x, u, d);
        CHECK((coarse.step(x0, u, d) - x).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("downsampling composes") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const LtiModel model(random_matrix(rng, 3, 3, 0.6), random_matrix(rng, 3, 2, 1.0),
                             random_matrix(rng, 3, 1, 1.0), 1.0, {true, false, true});
        const auto twice = hmpc::downsample(hmpc::downsample(model, 2), 3);
        const auto once = hmpc::downsample(model, 6);
        CHECK((twice.a() - once.a()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((twice.b_control() - once.b_control()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((twice.b_demand() - once.b_demand()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("state set membership") {
    const auto x_set = hmpc::vehicle_state_bounds();
    auto inside = x_set.contains(Eigen::Vector4d(0, 0, 100, 25));
    CHECK(inside.inside);
    CHECK(inside.violation == 0.0);

    auto outside = x_set.contains(Eigen::Vector4d(0, 0, 100, 31.2));
    CHECK_FALSE(outside.inside);
    CHECK(outside.violation == doctest::Approx(1.2).epsilon(1e-12));

    const auto u_set = hmpc::vehicle_input_bounds();
    auto boundary = u_set.contains(Eigen::Vector3d(1, 1, 1));
    CHECK(boundary.inside);
    CHECK(boundary.violation == 0.0);

    CHECK_THROWS_AS((void)x_set.contains(Vector::Zero(3)), hmpc::DimensionError);
}

TEST_CASE("violation is zero exactly when inside") {
    std::mt19937_64 rng(8);
    const auto x_set = hmpc::vehicle_state_bounds();
    for (int trial = 0; trial < 500; ++trial) {
        const Vector x = random_matrix(rng, 4, 1, 120.0);
        const auto m = x_set.contains(x);
        CHECK(m.inside == (m.violation == 0.0));
    }
}

TEST_CASE("box rows have a single signed unit entry") {
    const auto x_set = hmpc::vehicle_state_bounds();
    REQUIRE(x_set.rows() == 8);
    for (int r = 0; r < x_set.rows(); ++r) {
        const auto coord = x_set.row_coordinate(r);
        REQUIRE(coord);
        CHECK(*coord == r / 2);
        CHECK(x_set.p()(r, *coord) == (r % 2 == 0 ? 1.0 : -1.0));
    }
    CHECK(x_set.q()(hmpc::box_upper_row(3)) == 30.0);
    CHECK(x_set.q()(hmpc::box_lower_row(0)) == 1.0);

    const auto shrunk = x_set.tightened(Vector::Unit(8, hmpc::box_upper_row(3)) * 1.2);
    CHECK(shrunk.q()(hmpc::box_upper_row(3)) == doctest::Approx(28.8));
}
