#pragma once

#include <string>

#include "refshape/state_space.hpp"

namespace refshape {

enum class SolverStatus { optimal, max_iterations, infeasible };

const char* to_string(SolverStatus status);

/// min 1/2 x'Px + q'x  subject to  lower <= Ax <= upper (elementwise,
/// +/-infinity allowed). A may have zero rows (unconstrained problem).
struct BoxQp {
    Matrix P;
    Vector q;
    Matrix A;
    Vector lower;
    Vector upper;
};

struct BoxQpOptions {
    int max_iterations = 50000;
    double eps_primal = 1e-9;      // absolute infinity-norm targets
    double eps_dual = 1e-8;
    double kkt_accept = 1e-6;      // residual below which the result counts as optimal
};

struct BoxQpResult {
    Vector x;
    Vector dual;              // multipliers for the rows of A
    SolverStatus status = SolverStatus::optimal;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    std::string message;
};

/// Operator-splitting (ADMM) solver for small dense box-constrained QPs,
/// with an active-set polish step on convergence.
BoxQpResult solve_box_qp(const BoxQp& qp, const BoxQpOptions& options = {});

}  // namespace refshape
