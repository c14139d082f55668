#include <doctest.h>

#include <limits>
#include <random>

#include "refshape/qp.hpp"
#include "test_support.hpp"

using refshape::BoxQp;
using refshape::BoxQpResult;
using refshape::Matrix;
using refshape::SolverStatus;
using refshape::Vector;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BoxQp scalar_problem(double p, double q, double lo, double hi) {
    BoxQp qp;
    qp.P = Matrix::Constant(1, 1, p);
    qp.q = Vector::Constant(1, q);
    qp.A = Matrix::Identity(1, 1);
    qp.lower = Vector::Constant(1, lo);
    qp.upper = Vector::Constant(1, hi);
    return qp;
}

}  // namespace

TEST_CASE("solve_box_qp: scalar with inactive, lower-active and upper-active box") {
    // min 1/2 x^2 - x  -> unconstrained minimizer at 1
    BoxQpResult free = refshape::solve_box_qp(scalar_problem(1.0, -1.0, -10.0, 10.0));
    CHECK(free.status == SolverStatus::optimal);
    CHECK(free.x[0] == doctest::Approx(1.0).epsilon(1e-8));

    BoxQpResult low = refshape::solve_box_qp(scalar_problem(1.0, -1.0, 2.0, 10.0));
    CHECK(low.status == SolverStatus::optimal);
    CHECK(low.x[0] == doctest::Approx(2.0).epsilon(1e-8));

    BoxQpResult high = refshape::solve_box_qp(scalar_problem(1.0, -1.0, -10.0, 0.5));
    CHECK(high.status == SolverStatus::optimal);
    CHECK(high.x[0] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("solve_box_qp: equality row pins a coordinate") {
    BoxQp qp;
    qp.P = Matrix::Identity(2, 2);
    qp.q = Vector(2);
    qp.q << -2.0, -4.0;
    qp.A = Matrix::Identity(2, 2);
    qp.lower = Vector(2);
    qp.upper = Vector(2);
    qp.lower << 3.0, -kInf;
    qp.upper << 3.0, kInf;
    const BoxQpResult result = refshape::solve_box_qp(qp);
    CHECK(result.status == SolverStatus::optimal);
    CHECK(result.x[0] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(result.x[1] == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("solve_box_qp: general constraint row") {
    // min 1/2 ||x||^2 s.t. x1 + x2 >= 2 -> x = (1, 1)
    BoxQp qp;
    qp.P = Matrix::Identity(2, 2);
    qp.q = Vector::Zero(2);
    qp.A = Matrix::Ones(1, 2);
    qp.lower = Vector::Constant(1, 2.0);
    qp.upper = Vector::Constant(1, kInf);
    const BoxQpResult result = refshape::solve_box_qp(qp);
    CHECK(result.status == SolverStatus::optimal);
    CHECK(result.x[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(result.x[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("solve_box_qp: empty interval is reported infeasible with the row") {
    BoxQpResult result = refshape::solve_box_qp(scalar_problem(1.0, 0.0, 1.0, -1.0));
    CHECK(result.status == SolverStatus::infeasible);
    CHECK(result.message.find("row 0") != std::string::npos);
}

TEST_CASE("solve_box_qp: zero row with nonzero requirement is infeasible") {
    BoxQp qp = scalar_problem(1.0, 0.0, 1.0, 2.0);
    qp.A = Matrix::Zero(1, 1);
    const BoxQpResult result = refshape::solve_box_qp(qp);
    CHECK(result.status == SolverStatus::infeasible);
}

TEST_CASE("solve_box_qp: no finite bounds goes through the direct path") {
    BoxQp qp;
    qp.P = Matrix::Identity(2, 2) * 2.0;
    qp.q = Vector(2);
    qp.q << -2.0, 4.0;
    qp.A = Matrix::Identity(2, 2);
    qp.lower = Vector::Constant(2, -kInf);
    qp.upper = Vector::Constant(2, kInf);
    const BoxQpResult result = refshape::solve_box_qp(qp);
    CHECK(result.status == SolverStatus::optimal);
    CHECK(result.x[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(result.x[1] == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("solve_box_qp: singular unconstrained problem returns the minimum-norm solution") {
    // flat along x1 - x2; the minimizer set is a line, expect its least-norm point
    Matrix P(2, 2);
    P << 1.0, 1.0, 1.0, 1.0;
    BoxQp qp;
    qp.P = P;
    qp.q = Vector::Constant(2, -1.0);
    qp.A = Matrix::Zero(0, 2);
    qp.lower = Vector::Zero(0);
    qp.upper = Vector::Zero(0);
    const BoxQpResult result = refshape::solve_box_qp(qp);
    CHECK(result.x[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(result.x[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("solve_box_qp: random problems satisfy the KKT conditions") {
    std::mt19937 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> width(0.1, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const int m = 1 + static_cast<int>(rng() % 8);
        Matrix root(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) root(i, j) = gauss(rng);
        BoxQp qp;
        qp.P = root.transpose() * root + 0.1 * Matrix::Identity(n, n);
        qp.q = Vector::NullaryExpr(n, [&](Eigen::Index) { return gauss(rng); });
        qp.A = Matrix::NullaryExpr(m, n,
                                   [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        // center the boxes on a known point so the instance is feasible
        const Vector feasible =
            Vector::NullaryExpr(n, [&](Eigen::Index) { return gauss(rng); });
        const Vector mid = qp.A * feasible;
        qp.lower = Vector(m);
        qp.upper = Vector(m);
        for (int i = 0; i < m; ++i) {
            qp.lower[i] = mid[i] - width(rng);
            qp.upper[i] = mid[i] + width(rng);
        }
        const BoxQpResult result = refshape::solve_box_qp(qp);
        REQUIRE(result.status == SolverStatus::optimal);
        CHECK(result.primal_residual <= 1e-6);
        CHECK(result.dual_residual <= 1e-6);
        const Vector ax = qp.A * result.x;
        for (int i = 0; i < m; ++i) {
            CHECK(ax[i] >= qp.lower[i] - 1e-8);
            CHECK(ax[i] <= qp.upper[i] + 1e-8);
        }
    }
}
