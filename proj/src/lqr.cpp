#include "refshape/lqr.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace refshape {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kResidualTarget = 1e-12;   // relative, doubling usually lands ~1e-15
constexpr double kResidualAccept = 1e-10;   // reject the solve above this
constexpr int kMaxIterations = 10000;

void require_symmetric(const Matrix& m, const char* name) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument(std::string("LqrWeights: ") + name + " must be square");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (((m - m.transpose()).cwiseAbs().maxCoeff()) > kSymmetryTol * scale) {
        throw std::invalid_argument(std::string("LqrWeights: ") + name + " must be symmetric");
    }
}

}  // namespace

ReferenceProfile::ReferenceProfile(std::vector<Vector> values_, double dt_)
    : values(std::move(values_)), dt(dt_) {
    if (values.empty()) {
        throw std::invalid_argument("ReferenceProfile: need at least one sample");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("ReferenceProfile: sample time must be positive");
    }
    const Eigen::Index p = values.front().size();
    for (const Vector& v : values) {
        if (v.size() != p) {
            throw std::invalid_argument("ReferenceProfile: samples must share one dimension");
        }
        if (!v.array().isFinite().all()) {
            throw std::invalid_argument("ReferenceProfile: samples must be finite");
        }
    }
}

ReferenceProfile ReferenceProfile::constant(double value, std::size_t n, double dt) {
    std::vector<Vector> values(n, Vector::Constant(1, value));
    return ReferenceProfile(std::move(values), dt);
}

LqrWeights::LqrWeights(Matrix Q_, Matrix R_) : Q(std::move(Q_)), R(std::move(R_)) {
    require_symmetric(Q, "Q");
    require_symmetric(R, "R");
    Eigen::SelfAdjointEigenSolver<Matrix> q_eigs(Q, Eigen::EigenvaluesOnly);
    if (q_eigs.eigenvalues().minCoeff() < -1e-12) {
        throw std::invalid_argument("LqrWeights: Q must be positive semidefinite");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> r_eigs(R, Eigen::EigenvaluesOnly);
    if (r_eigs.eigenvalues().minCoeff() <= 0.0) {
        throw std::invalid_argument("LqrWeights: R must be positive definite");
    }
}

LqrDesign::LqrDesign(Matrix P_, Matrix K_, LqrWeights weights_, StateSpace sys_)
    : P(std::move(P_)), K(std::move(K_)), weights(std::move(weights_)), sys(std::move(sys_)) {
    const double res = dare_residual(sys, weights, P);
    if (res >= 1e-8 * std::max(1.0, P.norm())) {
        std::ostringstream msg;
        msg << "LqrDesign: Riccati residual " << res << " exceeds tolerance";
        throw std::invalid_argument(msg.str());
    }
    const Matrix k_check =
        (weights.R + sys.B.transpose() * P * sys.B).ldlt().solve(sys.B.transpose() * P * sys.A);
    if ((K - k_check).norm() > 1e-9 * std::max(1.0, k_check.norm())) {
        throw std::invalid_argument("LqrDesign: K does not match (R + B'PB)^{-1} B'PA");
    }
    if (spectral_radius(sys.A - sys.B * K) >= 1.0) {
        throw std::invalid_argument("LqrDesign: closed loop A - BK is not stable");
    }
}

double dare_residual(const StateSpace& sys, const LqrWeights& w, const Matrix& P) {
    const Matrix& A = sys.A;
    const Matrix& B = sys.B;
    const Matrix BtPA = B.transpose() * P * A;
    const Matrix rhs = A.transpose() * P * A -
                       BtPA.transpose() * (w.R + B.transpose() * P * B).ldlt().solve(BtPA) +
                       w.Q;
    return (P - rhs).norm();
}

LqrDesign solve_dare(const StateSpace& sys, const LqrWeights& w) {
    const Eigen::Index n = sys.state_dim();
    if (w.Q.rows() != n) {
        throw std::invalid_argument("solve_dare: Q dimension does not match the state");
    }
    if (w.R.rows() != sys.input_dim()) {
        throw std::invalid_argument("solve_dare: R dimension does not match the input");
    }

    // Structure-preserving doubling on (A_k, G_k, H_k); H_k converges to P
    // quadratically for stabilizable/detectable data.
    Matrix Ak = sys.A;
    Matrix G = sys.B * w.R.ldlt().solve(sys.B.transpose());
    Matrix H = w.Q;
    const Matrix identity = Matrix::Identity(n, n);

    double best_residual = std::numeric_limits<double>::infinity();
    Matrix best_P = H;
    for (int iter = 0; iter < 100; ++iter) {
        const double res = dare_residual(sys, w, H);
        if (std::isfinite(res) && res < best_residual) {
            best_residual = res;
            best_P = H;
        }
        if (res < kResidualTarget * std::max(1.0, H.norm()) || !H.allFinite()) {
            break;
        }

        Eigen::PartialPivLU<Matrix> w_lu(identity + G * H);
        const Matrix v1 = w_lu.solve(Ak);
        const Matrix v2 = w_lu.solve(G.transpose()).transpose();
        G += Ak * v2 * Ak.transpose();
        H += v1.transpose() * H * Ak;
        Ak *= v1;
        if (!H.allFinite()) break;
    }

    // Near-unit-circle pencils can defeat the doubling scheme; fall back to
    // the plain Riccati recursion from Q, which converges (linearly) whenever
    // the data is stabilizable and detectable.
    if (!(best_residual < kResidualTarget * std::max(1.0, best_P.norm()))) {
        Matrix P = w.Q;
        for (int iter = 0; iter < kMaxIterations; ++iter) {
            const Matrix BtPA = sys.B.transpose() * P * sys.A;
            const Matrix next =
                sys.A.transpose() * P * sys.A -
                BtPA.transpose() * (w.R + sys.B.transpose() * P * sys.B).ldlt().solve(BtPA) +
                w.Q;
            if (!next.allFinite()) break;
            P = 0.5 * (next + next.transpose());
            if (iter % 10 == 9) {
                const double res = dare_residual(sys, w, P);
                if (std::isfinite(res) && res < best_residual) {
                    best_residual = res;
                    best_P = P;
                }
                if (res < kResidualTarget * std::max(1.0, P.norm())) break;
            }
        }
    }

    if (!(best_residual < kResidualAccept * std::max(1.0, best_P.norm()))) {
        std::ostringstream msg;
        msg << "solve_dare: did not converge, best residual " << best_residual
            << " (relative target " << kResidualAccept << "); is (A, B) stabilizable?";
        throw std::runtime_error(msg.str());
    }

    const Matrix P = 0.5 * (best_P + best_P.transpose());
    const Matrix K =
        (w.R + sys.B.transpose() * P * sys.B).ldlt().solve(sys.B.transpose() * P * sys.A);
    return LqrDesign(P, K, w, sys);
}

SteadyStateTarget steady_state_target(const StateSpace& sys, const Vector& r) {
    const Eigen::Index n = sys.state_dim();
    const Eigen::Index m = sys.input_dim();
    const Eigen::Index p = sys.output_dim();
    if (r.size() != p) {
        throw std::invalid_argument("steady_state_target: reference has wrong dimension");
    }
    if (m != p) {
        throw std::invalid_argument(
            "steady_state_target: need as many inputs as outputs to invert the target system");
    }

    Matrix block(n + p, n + m);
    block.topLeftCorner(n, n) = Matrix::Identity(n, n) - sys.A;
    block.topRightCorner(n, m) = -sys.B;
    block.bottomLeftCorner(p, n) = sys.C;
    block.bottomRightCorner(p, m).setZero();

    Eigen::PartialPivLU<Matrix> lu(block);
    const double pivot_floor = 1e-12 * block.cwiseAbs().maxCoeff();
    if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() <= pivot_floor) {
        throw std::runtime_error(
            "steady_state_target: block matrix is singular; the system cannot realize "
            "arbitrary constant references (transmission zero at z = 1)");
    }

    Vector rhs = Vector::Zero(n + p);
    rhs.tail(p) = r;
    const Vector sol = lu.solve(rhs);

    SteadyStateTarget target;
    target.x = sol.head(n);
    target.u = sol.tail(m);
    target.reference = r;
    return target;
}

std::pair<Vector, Vector> closed_loop_step(const LqrDesign& design, const Vector& x,
                                           const SteadyStateTarget& target) {
    if (x.size() != design.sys.state_dim()) {
        throw std::invalid_argument("closed_loop_step: state has wrong dimension");
    }
    if (target.x.size() != x.size() || target.u.size() != design.sys.input_dim()) {
        throw std::invalid_argument("closed_loop_step: target has wrong dimensions");
    }
    Vector u = -design.K * (x - target.x) + target.u;
    Vector x_next = design.sys.A * x + design.sys.B * u;
    return {std::move(u), std::move(x_next)};
}

Trajectory simulate_closed_loop(const LqrDesign& design, const Vector& x0,
                                const ReferenceProfile& refs) {
    if (x0.size() != design.sys.state_dim()) {
        throw std::invalid_argument("simulate_closed_loop: x0 has wrong dimension");
    }

    Trajectory traj;
    traj.dt = refs.dt;
    traj.states.reserve(refs.size() + 1);
    traj.outputs.reserve(refs.size() + 1);
    traj.inputs.reserve(refs.size());

    Vector x = x0;
    traj.states.push_back(x);
    traj.outputs.push_back(design.sys.C * x);
    for (const Vector& r : refs.values) {
        const SteadyStateTarget target = steady_state_target(design.sys, r);
        auto [u, x_next] = closed_loop_step(design, x, target);
        traj.inputs.push_back(std::move(u));
        x = std::move(x_next);
        traj.states.push_back(x);
        traj.outputs.push_back(design.sys.C * x);
    }
    return traj;
}

}  // namespace refshape
