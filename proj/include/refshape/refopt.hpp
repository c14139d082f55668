#pragma once

#include <string>
#include <vector>

#include "refshape/lqr.hpp"
#include "refshape/qp.hpp"
#include "refshape/reference.hpp"

namespace refshape {

/// Axis-aligned bounds on inputs, shaped references and states. An empty
/// vector means the whole family is unbounded; individual entries may be
/// +/-infinity. min <= max is enforced wherever both sides are finite.
struct BoxBounds {
    Vector u_min, u_max;
    Vector r_min, r_max;
    Vector x_min, x_max;

    void validate(Eigen::Index n, Eigen::Index m, Eigen::Index p) const;
    bool unbounded() const;

    /// r in [-8, 0] N, u >= 0; everything else free.
    static BoxBounds defaults(const StateSpace& sys);
};

/// Reference-shaping problem: find the blocked perturbation v so that the
/// closed loop under r + v tracks r as well as possible.
struct RefOptProblem {
    StateSpace sys;
    LqrDesign design;
    ReferenceProfile refs;
    Vector x0;
    double smoothness_weight = 1e-3;  // Q_v
    int hold_length = 1;              // N_h
    BoxBounds bounds;

    void validate() const;
};

/// The horizon problem condensed onto the blocked perturbation c:
/// objective(c) = 1/2 c'Hc + g'c + constant, and affine maps recovering the
/// full trajectory. Stacking is sample-major (sample k occupies rows
/// [k*dim, (k+1)*dim)).
struct CondensedQp {
    Matrix hessian;      // H, symmetric PSD
    Vector gradient;     // g
    double constant = 0.0;

    Matrix force_map;    // (N+1)p x Nb*p
    Vector force_offset;
    Matrix input_map;    // N*m x Nb*p
    Vector input_offset;
    Matrix state_map;    // (N+1)n x Nb*p
    Vector state_offset;
    Matrix ref_map;      // N*p x Nb*p, the block expansion E
    Vector ref_offset;   // stacked r

    Eigen::Index block_count = 0;
    Eigen::Index block_dim = 0;  // p
};

struct RefOptResult {
    std::vector<Vector> perturbation;  // v, length N
    ReferenceProfile modified;         // r + v
    Trajectory predicted;              // closed-loop trace from the condensed maps
    double objective = 0.0;
    SolverStatus status = SolverStatus::optimal;
    std::string message;
};

/// Condense the closed-loop horizon onto the blocked decision vector.
CondensedQp condense(const RefOptProblem& problem);

/// Solve the reference-shaping QP. Unbounded problems go through a direct
/// minimum-norm least-squares solve; bounded ones through the ADMM solver.
RefOptResult solve(const RefOptProblem& problem);

/// Zero-order-hold expansion: output[k] = blocks[k / hold_length]. The last
/// block may cover fewer than hold_length samples.
std::vector<Vector> expand_blocks(const std::vector<Vector>& blocks, std::size_t n_samples,
                                  int hold_length);

/// Number of blocks covering n_samples at the given hold length.
std::size_t block_count(std::size_t n_samples, int hold_length);

}  // namespace refshape
