#include "refshape/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace refshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSigma = 1e-6;       // proximal regularization on x
constexpr double kRelaxation = 1.6;   // over-relaxation factor
constexpr double kRhoEquality = 1e3;  // rho boost on rows with lower == upper

struct RhoScheme {
    double rho = 0.1;
    Vector row_rho;  // per-row, equality rows get rho * kRhoEquality

    void assign(const Vector& lower, const Vector& upper) {
        row_rho.resize(lower.size());
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            const bool equality = std::isfinite(lower[i]) && lower[i] == upper[i];
            row_rho[i] = equality ? rho * kRhoEquality : rho;
        }
    }
};

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Vector clamp(const Vector& v, const Vector& lower, const Vector& upper) {
    return v.cwiseMax(lower).cwiseMin(upper);
}

/// Equality-constrained polish on the active set implied by multiplier signs.
/// Returns true and overwrites (x, y) when the polished point is feasible and
/// at least as accurate as the current iterate.
bool polish(const BoxQp& qp, Vector& x, Vector& y, double* primal_res, double* dual_res) {
    const Eigen::Index n = qp.P.rows();
    const Eigen::Index m = qp.A.rows();

    std::vector<Eigen::Index> active;
    std::vector<double> bound;
    std::vector<int> side;  // -1 lower, +1 upper
    for (Eigen::Index i = 0; i < m; ++i) {
        const bool equality = std::isfinite(qp.lower[i]) && qp.lower[i] == qp.upper[i];
        if (equality || (y[i] < 0.0 && std::isfinite(qp.lower[i]))) {
            active.push_back(i);
            bound.push_back(qp.lower[i]);
            side.push_back(-1);
        } else if (y[i] > 0.0 && std::isfinite(qp.upper[i])) {
            active.push_back(i);
            bound.push_back(qp.upper[i]);
            side.push_back(+1);
        }
    }

    const Eigen::Index na = static_cast<Eigen::Index>(active.size());
    Matrix kkt = Matrix::Zero(n + na, n + na);
    kkt.topLeftCorner(n, n) = qp.P + 1e-12 * Matrix::Identity(n, n);
    for (Eigen::Index j = 0; j < na; ++j) {
        kkt.block(0, n + j, n, 1) = qp.A.row(active[j]).transpose();
        kkt.block(n + j, 0, 1, n) = qp.A.row(active[j]);
        kkt(n + j, n + j) = -1e-12;
    }
    Vector rhs(n + na);
    rhs.head(n) = -qp.q;
    for (Eigen::Index j = 0; j < na; ++j) rhs[n + j] = bound[j];

    Eigen::PartialPivLU<Matrix> lu(kkt);
    Vector sol = lu.solve(rhs);
    // one round of iterative refinement against the regularized system
    sol += lu.solve(rhs - kkt * sol);
    if (!sol.allFinite()) return false;

    Vector x_new = sol.head(n);
    Vector y_new = Vector::Zero(m);
    for (Eigen::Index j = 0; j < na; ++j) y_new[active[j]] = sol[n + j];

    const Vector ax = qp.A * x_new;
    double prim = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        prim = std::max(prim, std::max(qp.lower[i] - ax[i], ax[i] - qp.upper[i]));
    }
    prim = std::max(prim, 0.0);
    const double dual = inf_norm(qp.P * x_new + qp.q + qp.A.transpose() * y_new);
    // multiplier signs must be consistent with the chosen sides
    for (Eigen::Index j = 0; j < na; ++j) {
        const bool equality =
            std::isfinite(qp.lower[active[j]]) && qp.lower[active[j]] == qp.upper[active[j]];
        if (equality) continue;
        if (side[j] < 0 && y_new[active[j]] > 1e-8) return false;
        if (side[j] > 0 && y_new[active[j]] < -1e-8) return false;
    }

    if (prim <= std::max(*primal_res, 1e-9) && dual <= std::max(*dual_res, 1e-9)) {
        x = std::move(x_new);
        y = std::move(y_new);
        *primal_res = prim;
        *dual_res = dual;
        return true;
    }
    return false;
}

BoxQpResult solve_unconstrained(const BoxQp& qp) {
    BoxQpResult result;
    // Minimum-norm minimizer; covers singular P (flat directions) as well.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(qp.P);
    result.x = cod.solve(-qp.q);
    result.dual = Vector::Zero(qp.A.rows());
    result.dual_residual = inf_norm(qp.P * result.x + qp.q);
    result.primal_residual = 0.0;
    result.status = result.dual_residual <= 1e-6 * std::max(1.0, inf_norm(qp.q))
                        ? SolverStatus::optimal
                        : SolverStatus::max_iterations;
    if (result.status != SolverStatus::optimal) {
        result.message = "unconstrained normal equations left a large residual";
    }
    return result;
}

}  // namespace

const char* to_string(SolverStatus status) {
    switch (status) {
        case SolverStatus::optimal: return "optimal";
        case SolverStatus::max_iterations: return "max_iterations";
        case SolverStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

BoxQpResult solve_box_qp(const BoxQp& qp, const BoxQpOptions& options) {
    const Eigen::Index n = qp.P.rows();
    const Eigen::Index m = qp.A.rows();
    if (qp.P.cols() != n || qp.q.size() != n) {
        throw std::invalid_argument("solve_box_qp: P/q dimensions disagree");
    }
    if (qp.A.cols() != n && m > 0) {
        throw std::invalid_argument("solve_box_qp: A column count must match P");
    }
    if (qp.lower.size() != m || qp.upper.size() != m) {
        throw std::invalid_argument("solve_box_qp: bounds must match A rows");
    }

    BoxQpResult result;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (qp.lower[i] > qp.upper[i]) {
            std::ostringstream msg;
            msg << "constraint row " << i << " is empty: lower " << qp.lower[i]
                << " exceeds upper " << qp.upper[i];
            result.status = SolverStatus::infeasible;
            result.message = msg.str();
            result.x = Vector::Zero(n);
            result.dual = Vector::Zero(m);
            return result;
        }
        if (qp.A.row(i).cwiseAbs().maxCoeff() == 0.0 &&
            (qp.lower[i] > 0.0 || qp.upper[i] < 0.0)) {
            std::ostringstream msg;
            msg << "constraint row " << i << " fixes a constant outside its bounds";
            result.status = SolverStatus::infeasible;
            result.message = msg.str();
            result.x = Vector::Zero(n);
            result.dual = Vector::Zero(m);
            return result;
        }
    }

    const bool any_finite_bound =
        m > 0 && (qp.lower.array().isFinite().any() || qp.upper.array().isFinite().any());
    if (!any_finite_bound) {
        return solve_unconstrained(qp);
    }

    RhoScheme rho;
    rho.assign(qp.lower, qp.upper);

    Vector x = Vector::Zero(n);
    Vector z = clamp(Vector::Zero(m), qp.lower, qp.upper);
    Vector y = Vector::Zero(m);

    auto factorize = [&](void) {
        Matrix kkt = qp.P + kSigma * Matrix::Identity(n, n);
        kkt.noalias() += qp.A.transpose() * rho.row_rho.asDiagonal() * qp.A;
        return Eigen::LDLT<Matrix>(kkt);
    };
    Eigen::LDLT<Matrix> kkt = factorize();

    double primal_res = kInf;
    double dual_res = kInf;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const Vector rhs =
            kSigma * x - qp.q + qp.A.transpose() * (rho.row_rho.asDiagonal() * z - y);
        const Vector x_tilde = kkt.solve(rhs);
        const Vector z_tilde = qp.A * x_tilde;

        x = kRelaxation * x_tilde + (1.0 - kRelaxation) * x;
        const Vector z_hat = kRelaxation * z_tilde + (1.0 - kRelaxation) * z;
        z = clamp(z_hat + rho.row_rho.cwiseInverse().cwiseProduct(y), qp.lower, qp.upper);
        const Vector dy = rho.row_rho.cwiseProduct(z_hat - z);
        y += dy;

        if ((iter + 1) % 25 != 0) continue;

        const Vector ax = qp.A * x;
        primal_res = inf_norm(ax - z);
        dual_res = inf_norm(qp.P * x + qp.q + qp.A.transpose() * y);

        if (primal_res <= options.eps_primal && dual_res <= options.eps_dual) break;

        // try to finish early once the iterate is roughly converged
        if (primal_res <= 1e-6 && dual_res <= 1e-5) {
            Vector px = x, py = y;
            double pp = primal_res, pd = dual_res;
            if (polish(qp, px, py, &pp, &pd) && pp <= options.eps_primal &&
                pd <= options.eps_dual) {
                x = std::move(px);
                y = std::move(py);
                primal_res = pp;
                dual_res = pd;
                break;
            }
        }

        // primal infeasibility certificate on the dual update direction
        const double dy_norm = inf_norm(dy);
        if (dy_norm > 1e-14) {
            double support = 0.0;
            bool certificate = inf_norm(qp.A.transpose() * dy) <= 1e-10 * dy_norm;
            for (Eigen::Index i = 0; certificate && i < m; ++i) {
                const double up = std::max(dy[i], 0.0);
                const double dn = std::min(dy[i], 0.0);
                if (up > 1e-10 * dy_norm && !std::isfinite(qp.upper[i])) certificate = false;
                if (-dn > 1e-10 * dy_norm && !std::isfinite(qp.lower[i])) certificate = false;
                if (up > 0.0 && std::isfinite(qp.upper[i])) support += qp.upper[i] * up;
                if (dn < 0.0 && std::isfinite(qp.lower[i])) support += qp.lower[i] * dn;
            }
            if (certificate && support < -1e-10 * dy_norm) {
                result.status = SolverStatus::infeasible;
                result.message = "constraints are jointly infeasible";
                result.x = x;
                result.dual = y;
                result.iterations = iter + 1;
                return result;
            }
        }

        // adaptive rho keeps the primal/dual residuals balanced
        if ((iter + 1) % 200 == 0 && primal_res > 0.0 && dual_res > 0.0) {
            const double scale_p = std::max({inf_norm(ax), inf_norm(z), 1.0});
            const double scale_d = std::max(
                {inf_norm(qp.P * x), inf_norm(qp.A.transpose() * y), inf_norm(qp.q), 1.0});
            const double ratio =
                std::sqrt((primal_res / scale_p) / std::max(dual_res / scale_d, 1e-16));
            if (ratio > 5.0 || ratio < 0.2) {
                rho.rho = std::clamp(rho.rho * ratio, 1e-6, 1e6);
                rho.assign(qp.lower, qp.upper);
                kkt = factorize();
            }
        }
    }

    polish(qp, x, y, &primal_res, &dual_res);

    result.x = std::move(x);
    result.dual = std::move(y);
    result.primal_residual = primal_res;
    result.dual_residual = dual_res;
    result.iterations = iter;
    if (std::max(primal_res, dual_res) <= options.kkt_accept) {
        result.status = SolverStatus::optimal;
    } else {
        result.status = SolverStatus::max_iterations;
        std::ostringstream msg;
        msg << "stopped after " << iter << " iterations with KKT residual "
            << std::max(primal_res, dual_res);
        result.message = msg.str();
    }
    return result;
}

}  // namespace refshape
