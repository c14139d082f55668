#include "refshape/state_space.hpp"

#include <stdexcept>
#include <string>

namespace refshape {

namespace {

bool all_finite(const Matrix& m) { return m.array().isFinite().all(); }

}  // namespace

StateSpace::StateSpace(Matrix A_, Matrix B_, Matrix C_, double dt_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), dt(dt_) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("StateSpace: A must be square, got " +
                                    std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
    }
    if (B.rows() != A.rows()) {
        throw std::invalid_argument("StateSpace: B must have as many rows as A");
    }
    if (C.cols() != A.cols()) {
        throw std::invalid_argument("StateSpace: C must have as many columns as A");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("StateSpace: sample time must be positive");
    }
    if (!all_finite(A) || !all_finite(B) || !all_finite(C)) {
        throw std::invalid_argument("StateSpace: matrices must be finite");
    }
}

Trajectory simulate(const StateSpace& sys, const Vector& x0,
                    const std::vector<Vector>& inputs) {
    if (x0.size() != sys.state_dim()) {
        throw std::invalid_argument("simulate: x0 has dimension " + std::to_string(x0.size()) +
                                    ", expected " + std::to_string(sys.state_dim()));
    }
    if (!x0.array().isFinite().all()) {
        throw std::invalid_argument("simulate: x0 must be finite");
    }
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (inputs[k].size() != sys.input_dim()) {
            throw std::invalid_argument("simulate: input " + std::to_string(k) +
                                        " has dimension " + std::to_string(inputs[k].size()) +
                                        ", expected " + std::to_string(sys.input_dim()));
        }
        if (!inputs[k].array().isFinite().all()) {
            throw std::invalid_argument("simulate: input " + std::to_string(k) + " is not finite");
        }
    }

    Trajectory traj;
    traj.dt = sys.dt;
    traj.states.reserve(inputs.size() + 1);
    traj.outputs.reserve(inputs.size() + 1);
    traj.inputs = inputs;

    Vector x = x0;
    traj.states.push_back(x);
    traj.outputs.push_back(sys.C * x);
    for (const Vector& u : inputs) {
        x = sys.A * x + sys.B * u;
        traj.states.push_back(x);
        traj.outputs.push_back(sys.C * x);
    }
    return traj;
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("spectral_radius: matrix must be square");
    }
    if (!all_finite(m)) {
        throw std::invalid_argument("spectral_radius: matrix must be finite");
    }
    if (m.rows() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("spectral_radius: eigenvalue iteration failed");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace refshape
