#pragma once

#include <utility>

#include "refshape/reference.hpp"
#include "refshape/state_space.hpp"

namespace refshape {

/// Quadratic cost weights: Q symmetric PSD on the state, R symmetric PD on
/// the input. Validated at construction.
struct LqrWeights {
    Matrix Q;
    Matrix R;

    LqrWeights(Matrix Q_, Matrix R_);
};

/// Infinite-horizon discrete LQR design: Riccati solution P, gain K, and the
/// model/weights it was computed for. K = (R + B'PB)^{-1} B'PA; the closed
/// loop A - BK is verified stable at construction.
struct LqrDesign {
    Matrix P;
    Matrix K;
    LqrWeights weights;
    StateSpace sys;

    LqrDesign(Matrix P_, Matrix K_, LqrWeights weights_, StateSpace sys_);
};

/// State/input pair holding the output at a constant reference r:
/// C x = r and x = A x + B u.
struct SteadyStateTarget {
    Vector x;          // x_ss
    Vector u;          // u_ss
    Vector reference;  // r realized by (x, u)
};

/// Frobenius-norm residual of the Riccati fixed point at P.
double dare_residual(const StateSpace& sys, const LqrWeights& w, const Matrix& P);

/// Solve the discrete algebraic Riccati equation for (A, B, Q, R) by
/// structure-preserving doubling, then form the gain. Throws if the
/// iteration does not reach the residual target.
LqrDesign solve_dare(const StateSpace& sys, const LqrWeights& w);

/// Solve [[I - A, -B], [C, 0]] [x; u] = [0; r] for the steady-state target.
/// Throws if the block matrix is singular (transmission zero at z = 1).
SteadyStateTarget steady_state_target(const StateSpace& sys, const Vector& r);

/// One step of the tracking law: u = -K (x - x_ss) + u_ss, x+ = A x + B u.
std::pair<Vector, Vector> closed_loop_step(const LqrDesign& design, const Vector& x,
                                           const SteadyStateTarget& target);

/// Closed-loop rollout under the tracking law; the steady-state target is
/// recomputed from refs[k] at every step.
Trajectory simulate_closed_loop(const LqrDesign& design, const Vector& x0,
                                const ReferenceProfile& refs);

}  // namespace refshape
