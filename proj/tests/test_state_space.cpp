#include <doctest.h>

#include <random>

#include "refshape/fixture.hpp"
#include "refshape/state_space.hpp"
#include "test_support.hpp"

using refshape::Matrix;
using refshape::StateSpace;
using refshape::Trajectory;
using refshape::Vector;

namespace {

std::vector<Vector> scalar_inputs(std::initializer_list<double> values) {
    std::vector<Vector> out;
    for (double v : values) out.push_back(Vector::Constant(1, v));
    return out;
}

}  // namespace

TEST_CASE("simulate: zero initial state and zero inputs stay at zero") {
    const StateSpace sys = refshape::fixture::system();
    const Trajectory traj =
        refshape::simulate(sys, Vector::Zero(3), scalar_inputs({0, 0, 0, 0}));
    REQUIRE(traj.states.size() == 5);
    REQUIRE(traj.inputs.size() == 4);
    REQUIRE(traj.outputs.size() == 5);
    for (const Vector& x : traj.states) CHECK(x.norm() == 0.0);
    for (const Vector& y : traj.outputs) CHECK(y.norm() == 0.0);
}

TEST_CASE("simulate: unit impulse reproduces B and C*B on the bundled model") {
    const StateSpace sys = refshape::fixture::system();
    const Trajectory traj = refshape::simulate(sys, Vector::Zero(3), scalar_inputs({1.0}));

    CHECK(traj.states[1].isApprox(sys.B.col(0), 1e-15));

    // C*B by plain arithmetic, no matrix library involved
    const double b[3] = {0.00008626, -0.00008873, 0.0047217};
    const double c[3] = {-27.8759035, 0.22352502, -0.04037422};
    double cb = 0.0;
    for (int i = 0; i < 3; ++i) cb += c[i] * b[i];
    CHECK(traj.outputs[1][0] == doctest::Approx(cb).epsilon(1e-12));
}

TEST_CASE("simulate: scalar geometric decay") {
    const StateSpace sys(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0),
                         Matrix::Constant(1, 1, 2.0), 0.1);
    const Trajectory traj =
        refshape::simulate(sys, Vector::Constant(1, 1.0), scalar_inputs({0, 0}));
    CHECK(traj.outputs[0][0] == doctest::Approx(2.0));
    CHECK(traj.outputs[1][0] == doctest::Approx(1.0));
    CHECK(traj.outputs[2][0] == doctest::Approx(0.5));
}

TEST_CASE("simulate: rejects bad inputs") {
    const StateSpace sys = refshape::fixture::system();
    CHECK_THROWS_AS(refshape::simulate(sys, Vector::Zero(2), scalar_inputs({0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(refshape::simulate(sys, Vector::Zero(3), {Vector::Zero(2)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        refshape::simulate(sys, Vector::Zero(3),
                           scalar_inputs({std::numeric_limits<double>::quiet_NaN()})),
        std::invalid_argument);
}

TEST_CASE("StateSpace: dimension and finiteness checks") {
    Matrix A = Matrix::Identity(2, 3);
    CHECK_THROWS_AS(StateSpace(A, Matrix::Zero(2, 1), Matrix::Zero(1, 3), 0.01),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        StateSpace(Matrix::Identity(2, 2), Matrix::Zero(3, 1), Matrix::Zero(1, 2), 0.01),
        std::invalid_argument);
    CHECK_THROWS_AS(
        StateSpace(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 3), 0.01),
        std::invalid_argument);
    CHECK_THROWS_AS(
        StateSpace(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), 0.0),
        std::invalid_argument);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(StateSpace(bad, Matrix::Zero(2, 1), Matrix::Zero(1, 2), 0.01),
                    std::invalid_argument);
}

TEST_CASE("simulate: linearity and superposition") {
    std::mt19937 rng(91);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const StateSpace sys = refshape::fixture::system();

    std::vector<Vector> u1, u2;
    for (int k = 0; k < 20; ++k) {
        u1.push_back(Vector::Constant(1, gauss(rng)));
        u2.push_back(Vector::Constant(1, gauss(rng)));
    }
    Vector x1(3), x2(3);
    for (int i = 0; i < 3; ++i) {
        x1[i] = gauss(rng);
        x2[i] = gauss(rng);
    }

    const double alpha = 1.7;
    std::vector<Vector> u1_scaled;
    for (const Vector& u : u1) u1_scaled.push_back(alpha * u);
    const Trajectory base = refshape::simulate(sys, x1, u1);
    const Trajectory scaled = refshape::simulate(sys, alpha * x1, u1_scaled);
    for (std::size_t k = 0; k < base.states.size(); ++k) {
        CHECK((scaled.states[k] - alpha * base.states[k]).norm() <=
              1e-12 * std::max(1.0, base.states[k].norm()));
    }

    std::vector<Vector> u_sum;
    for (std::size_t k = 0; k < u1.size(); ++k) u_sum.push_back(u1[k] + u2[k]);
    const Trajectory t2 = refshape::simulate(sys, x2, u2);
    const Trajectory t_sum = refshape::simulate(sys, x1 + x2, u_sum);
    for (std::size_t k = 0; k < t_sum.states.size(); ++k) {
        const Vector expected = base.states[k] + t2.states[k];
        CHECK((t_sum.states[k] - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));
    }

    // output consistency invariant
    for (std::size_t k = 0; k < base.outputs.size(); ++k) {
        CHECK((base.outputs[k] - sys.C * base.states[k]).norm() <= 1e-14);
    }
}

TEST_CASE("spectral_radius: known values") {
    CHECK(refshape::spectral_radius(Matrix::Identity(2, 2)) == doctest::Approx(1.0));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 0.3;
    d(1, 1) = -0.9;
    CHECK(refshape::spectral_radius(d) == doctest::Approx(0.9));
    CHECK_THROWS_AS(refshape::spectral_radius(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("spectral_radius: closed loop of the bundled design, characteristic-polynomial oracle") {
    const StateSpace sys = refshape::fixture::system();
    const refshape::LqrDesign design = refshape::solve_dare(sys, refshape::fixture::weights());
    const Matrix closed = sys.A - sys.B * design.K;
    const double rho = refshape::spectral_radius(closed);
    CHECK(rho < 1.0);
    CHECK(rho == doctest::Approx(test_support::charpoly_spectral_radius(closed)).epsilon(1e-6));
}
