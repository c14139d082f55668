#pragma once

#include <vector>

#include <Eigen/Dense>

namespace refshape {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Discrete-time LTI model x[k+1] = A x[k] + B u[k], y[k] = C x[k].
///
/// Matrices are dense doubles; dimensions are checked at construction.
/// Instances are immutable after construction.
struct StateSpace {
    Matrix A;   // n x n state transition
    Matrix B;   // n x m input map
    Matrix C;   // p x n output map
    double dt;  // sample time [s], > 0

    StateSpace(Matrix A_, Matrix B_, Matrix C_, double dt_);

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index input_dim() const { return B.cols(); }
    Eigen::Index output_dim() const { return C.rows(); }
};

/// Simulated state/input/output sequences. states and outputs hold one more
/// sample than inputs; outputs[k] == C * states[k] by construction.
struct Trajectory {
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    std::vector<Vector> outputs;
    double dt = 0.0;

    std::size_t steps() const { return inputs.size(); }
};

/// Open-loop rollout from x0 under the given input sequence.
Trajectory simulate(const StateSpace& sys, const Vector& x0,
                    const std::vector<Vector>& inputs);

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& m);

}  // namespace refshape
