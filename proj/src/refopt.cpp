#include "refshape/refopt.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace refshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const Vector& lo, const Vector& hi, Eigen::Index dim, const char* name) {
    if (lo.size() != 0 && lo.size() != dim) {
        throw std::invalid_argument(std::string("BoxBounds: ") + name + "_min has wrong size");
    }
    if (hi.size() != 0 && hi.size() != dim) {
        throw std::invalid_argument(std::string("BoxBounds: ") + name + "_max has wrong size");
    }
    if (lo.size() == dim && hi.size() == dim) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] > hi[i]) {
                std::ostringstream msg;
                msg << "BoxBounds: " << name << " bound " << i << " has min " << lo[i]
                    << " above max " << hi[i];
                throw std::invalid_argument(msg.str());
            }
        }
    }
}

double bound_at(const Vector& v, Eigen::Index i, double fallback) {
    return v.size() == 0 ? fallback : v[i];
}

bool any_finite(const Vector& v) { return v.size() != 0 && v.array().isFinite().any(); }

}  // namespace

void BoxBounds::validate(Eigen::Index n, Eigen::Index m, Eigen::Index p) const {
    check_pair(u_min, u_max, m, "u");
    check_pair(r_min, r_max, p, "r");
    check_pair(x_min, x_max, n, "x");
}

bool BoxBounds::unbounded() const {
    return !any_finite(u_min) && !any_finite(u_max) && !any_finite(r_min) &&
           !any_finite(r_max) && !any_finite(x_min) && !any_finite(x_max);
}

BoxBounds BoxBounds::defaults(const StateSpace& sys) {
    BoxBounds b;
    b.r_min = Vector::Constant(sys.output_dim(), -8.0);
    b.r_max = Vector::Constant(sys.output_dim(), 0.0);
    b.u_min = Vector::Constant(sys.input_dim(), 0.0);
    return b;
}

void RefOptProblem::validate() const {
    if (hold_length < 1) {
        throw std::invalid_argument("RefOptProblem: hold length must be at least 1");
    }
    if (smoothness_weight < 0.0) {
        throw std::invalid_argument("RefOptProblem: smoothness weight must be nonnegative");
    }
    if (x0.size() != sys.state_dim()) {
        throw std::invalid_argument("RefOptProblem: x0 has wrong dimension");
    }
    if (refs.values.front().size() != sys.output_dim()) {
        throw std::invalid_argument("RefOptProblem: reference dimension does not match output");
    }
    bounds.validate(sys.state_dim(), sys.input_dim(), sys.output_dim());
}

std::size_t block_count(std::size_t n_samples, int hold_length) {
    return (n_samples + static_cast<std::size_t>(hold_length) - 1) /
           static_cast<std::size_t>(hold_length);
}

std::vector<Vector> expand_blocks(const std::vector<Vector>& blocks, std::size_t n_samples,
                                  int hold_length) {
    if (hold_length < 1) {
        throw std::invalid_argument("expand_blocks: hold length must be at least 1");
    }
    const std::size_t expected = block_count(n_samples, hold_length);
    if (blocks.size() != expected) {
        throw std::invalid_argument("expand_blocks: got " + std::to_string(blocks.size()) +
                                    " blocks, expected " + std::to_string(expected));
    }
    std::vector<Vector> out;
    out.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        out.push_back(blocks[k / static_cast<std::size_t>(hold_length)]);
    }
    return out;
}

CondensedQp condense(const RefOptProblem& problem) {
    problem.validate();
    const StateSpace& sys = problem.sys;
    const Eigen::Index n = sys.state_dim();
    const Eigen::Index m = sys.input_dim();
    const Eigen::Index p = sys.output_dim();
    const Eigen::Index N = static_cast<Eigen::Index>(problem.refs.size());
    const Eigen::Index Nb =
        static_cast<Eigen::Index>(block_count(problem.refs.size(), problem.hold_length));
    const Eigen::Index nc = Nb * p;

    // The per-step target of Eq-style tracking is linear in the reference:
    // [x_ss; u_ss] = T_map * r. Closing the loop around u = -K(x - x_ss) + u_ss
    // leaves dynamics affine in the shaped reference.
    Matrix block(n + p, n + m);
    block.topLeftCorner(n, n) = Matrix::Identity(n, n) - sys.A;
    block.topRightCorner(n, m) = -sys.B;
    block.bottomLeftCorner(p, n) = sys.C;
    block.bottomRightCorner(p, m).setZero();
    Eigen::PartialPivLU<Matrix> lu(block);
    if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() <=
        1e-12 * block.cwiseAbs().maxCoeff()) {
        throw std::runtime_error(
            "condense: steady-state block matrix is singular; constant references are "
            "not realizable");
    }
    Matrix rhs = Matrix::Zero(n + p, p);
    rhs.bottomRows(p) = Matrix::Identity(p, p);
    const Matrix target_map = lu.solve(rhs);
    const Matrix x_gain = target_map.topRows(n);     // x_ss per unit reference
    const Matrix u_gain = target_map.bottomRows(m);  // u_ss per unit reference

    const Matrix feed = problem.design.K * x_gain + u_gain;  // u = -K x + feed * r'
    const Matrix a_cl = sys.A - sys.B * problem.design.K;
    const Matrix b_ref = sys.B * feed;

    CondensedQp qp;
    qp.block_count = Nb;
    qp.block_dim = p;

    // Block expansion E: sample k copies block k / hold.
    qp.ref_map = Matrix::Zero(N * p, nc);
    qp.ref_offset.resize(N * p);
    for (Eigen::Index k = 0; k < N; ++k) {
        const Eigen::Index j = k / problem.hold_length;
        qp.ref_map.block(k * p, j * p, p, p) = Matrix::Identity(p, p);
        qp.ref_offset.segment(k * p, p) = problem.refs.values[static_cast<std::size_t>(k)];
    }

    qp.state_map = Matrix::Zero((N + 1) * n, nc);
    qp.state_offset.resize((N + 1) * n);
    qp.input_map = Matrix::Zero(N * m, nc);
    qp.input_offset.resize(N * m);
    qp.force_map = Matrix::Zero((N + 1) * p, nc);
    qp.force_offset.resize((N + 1) * p);

    Matrix x_map = Matrix::Zero(n, nc);
    Vector x_off = problem.x0;
    for (Eigen::Index k = 0; k <= N; ++k) {
        qp.state_map.middleRows(k * n, n) = x_map;
        qp.state_offset.segment(k * n, n) = x_off;
        qp.force_map.middleRows(k * p, p) = sys.C * x_map;
        qp.force_offset.segment(k * p, p) = sys.C * x_off;
        if (k == N) break;

        const Matrix ref_k_map = qp.ref_map.middleRows(k * p, p);
        const Vector ref_k_off = qp.ref_offset.segment(k * p, p);
        qp.input_map.middleRows(k * m, m) = -problem.design.K * x_map + feed * ref_k_map;
        qp.input_offset.segment(k * m, m) = -problem.design.K * x_off + feed * ref_k_off;
        x_map = a_cl * x_map + b_ref * ref_k_map;
        x_off = a_cl * x_off + b_ref * ref_k_off;
    }

    // Tracking term: forces at samples 1..N against the references that
    // produced them; F_0 carries no decision variable and is excluded.
    const Matrix track_map = qp.force_map.bottomRows(N * p);
    const Vector track_err0 = qp.force_offset.tail(N * p) - qp.ref_offset;

    // Smoothness term on the expanded perturbation; within-block differences
    // vanish by construction.
    Matrix diff = Matrix::Zero((N - 1) * p, N * p);
    for (Eigen::Index k = 0; k + 1 < N; ++k) {
        diff.block(k * p, (k + 1) * p, p, p) = Matrix::Identity(p, p);
        diff.block(k * p, k * p, p, p) = -Matrix::Identity(p, p);
    }
    const Matrix smooth_map = diff * qp.ref_map;

    qp.hessian = 2.0 * (track_map.transpose() * track_map +
                        problem.smoothness_weight * smooth_map.transpose() * smooth_map);
    qp.hessian = 0.5 * (qp.hessian + qp.hessian.transpose());
    qp.gradient = 2.0 * track_map.transpose() * track_err0;
    qp.constant = track_err0.squaredNorm();
    return qp;
}

namespace {

/// Constraint rows for the finite box bounds, expressed on the blocked
/// decision vector.
struct ConstraintStack {
    Matrix rows;
    Vector lower;
    Vector upper;
    std::vector<std::string> names;
};

ConstraintStack stack_constraints(const RefOptProblem& problem, const CondensedQp& qp) {
    const Eigen::Index n = problem.sys.state_dim();
    const Eigen::Index m = problem.sys.input_dim();
    const Eigen::Index p = problem.sys.output_dim();
    const Eigen::Index N = static_cast<Eigen::Index>(problem.refs.size());
    const BoxBounds& b = problem.bounds;

    struct Row {
        const Matrix* map;
        Eigen::Index index;
        double lower;
        double upper;
    };
    std::vector<Row> picked;
    std::vector<std::string> names;

    auto add_family = [&](const Matrix& map, const Vector& offset, const Vector& fam_lo,
                          const Vector& fam_hi, Eigen::Index dim, Eigen::Index count,
                          const char* label) {
        if (fam_lo.size() == 0 && fam_hi.size() == 0) return;
        for (Eigen::Index k = 0; k < count; ++k) {
            for (Eigen::Index i = 0; i < dim; ++i) {
                const double l = bound_at(fam_lo, i, -kInf);
                const double h = bound_at(fam_hi, i, kInf);
                if (!std::isfinite(l) && !std::isfinite(h)) continue;
                picked.push_back(
                    {&map, k * dim + i, l - offset[k * dim + i], h - offset[k * dim + i]});
                std::ostringstream name;
                name << label << " bound, component " << i << ", sample " << k;
                names.push_back(name.str());
            }
        }
    };

    // Reference bounds collapse to one interval per block coordinate: the
    // intersection over the block's samples. An empty intersection (a pinned
    // band straddling a reference change inside one block) is caught by the
    // solver's presolve and named here.
    Matrix block_rows(0, qp.ref_map.cols());
    std::vector<double> block_lo, block_hi;
    if (b.r_min.size() != 0 || b.r_max.size() != 0) {
        const Eigen::Index blocks = qp.block_count;
        for (Eigen::Index j = 0; j < blocks; ++j) {
            for (Eigen::Index i = 0; i < p; ++i) {
                const double l = bound_at(b.r_min, i, -kInf);
                const double h = bound_at(b.r_max, i, kInf);
                if (!std::isfinite(l) && !std::isfinite(h)) continue;
                double lo = -kInf, hi = kInf;
                for (Eigen::Index k = j * problem.hold_length;
                     k < std::min<Eigen::Index>((j + 1) * problem.hold_length, N); ++k) {
                    lo = std::max(lo, l - qp.ref_offset[k * p + i]);
                    hi = std::min(hi, h - qp.ref_offset[k * p + i]);
                }
                block_rows.conservativeResize(block_rows.rows() + 1, Eigen::NoChange);
                block_rows.row(block_rows.rows() - 1).setZero();
                block_rows(block_rows.rows() - 1, j * p + i) = 1.0;
                block_lo.push_back(lo);
                block_hi.push_back(hi);
                std::ostringstream name;
                name << "reference bound, component " << i << ", block " << j;
                names.push_back(name.str());
            }
        }
    }

    add_family(qp.input_map, qp.input_offset, b.u_min, b.u_max, m, N, "input");
    add_family(qp.state_map, qp.state_offset, b.x_min, b.x_max, n, N + 1, "state");

    ConstraintStack stack;
    const Eigen::Index ref_rows = block_rows.rows();
    const Eigen::Index rows = ref_rows + static_cast<Eigen::Index>(picked.size());
    stack.rows.resize(rows, qp.ref_map.cols());
    stack.lower.resize(rows);
    stack.upper.resize(rows);
    for (Eigen::Index r = 0; r < ref_rows; ++r) {
        stack.rows.row(r) = block_rows.row(r);
        stack.lower[r] = block_lo[static_cast<std::size_t>(r)];
        stack.upper[r] = block_hi[static_cast<std::size_t>(r)];
    }
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(picked.size()); ++r) {
        const Row& row = picked[static_cast<std::size_t>(r)];
        stack.rows.row(ref_rows + r) = row.map->row(row.index);
        stack.lower[ref_rows + r] = row.lower;
        stack.upper[ref_rows + r] = row.upper;
    }
    stack.names = std::move(names);
    return stack;
}

/// Minimum-norm solution of the stacked least-squares form; exact for
/// singular Hessians (flat tracking directions with Q_v = 0).
Vector solve_unbounded(const RefOptProblem& problem, const CondensedQp& qp) {
    const Eigen::Index p = problem.sys.output_dim();
    const Eigen::Index N = static_cast<Eigen::Index>(problem.refs.size());
    const Matrix track_map = qp.force_map.bottomRows(N * p);
    const Vector track_target = qp.ref_offset - qp.force_offset.tail(N * p);

    Matrix diff = Matrix::Zero((N - 1) * p, N * p);
    for (Eigen::Index k = 0; k + 1 < N; ++k) {
        diff.block(k * p, (k + 1) * p, p, p) = Matrix::Identity(p, p);
        diff.block(k * p, k * p, p, p) = -Matrix::Identity(p, p);
    }
    const double w = std::sqrt(problem.smoothness_weight);

    Matrix stacked(track_map.rows() + (N - 1) * p, track_map.cols());
    stacked.topRows(track_map.rows()) = track_map;
    stacked.bottomRows((N - 1) * p) = w * diff * qp.ref_map;
    Vector target = Vector::Zero(stacked.rows());
    target.head(track_map.rows()) = track_target;

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(stacked);
    return cod.solve(target);
}

}  // namespace

RefOptResult solve(const RefOptProblem& problem) {
    const CondensedQp qp = condense(problem);
    const Eigen::Index p = problem.sys.output_dim();
    const std::size_t N = problem.refs.size();

    RefOptResult result;
    Vector c;
    if (problem.bounds.unbounded()) {
        c = solve_unbounded(problem, qp);
        result.status = SolverStatus::optimal;
    } else {
        const ConstraintStack stack = stack_constraints(problem, qp);
        BoxQp box;
        box.P = qp.hessian;
        box.q = qp.gradient;
        box.A = stack.rows;
        box.lower = stack.lower;
        box.upper = stack.upper;
        BoxQpResult qp_result = solve_box_qp(box);
        c = qp_result.x;
        result.status = qp_result.status;
        result.message = qp_result.message;
        if (qp_result.status == SolverStatus::infeasible) {
            // name the offending constraint row when the presolve caught it
            const std::string prefix = "constraint row ";
            const auto pos = qp_result.message.find(prefix);
            if (pos != std::string::npos) {
                std::size_t idx = 0;
                try {
                    idx = std::stoul(qp_result.message.substr(pos + prefix.size()));
                } catch (...) {
                    idx = stack.names.size();
                }
                if (idx < stack.names.size()) {
                    result.message = "infeasible: " + stack.names[idx];
                }
            }
            c = Vector::Zero(qp.hessian.rows());
        }
    }

    std::vector<Vector> blocks;
    blocks.reserve(static_cast<std::size_t>(qp.block_count));
    for (Eigen::Index j = 0; j < qp.block_count; ++j) {
        blocks.push_back(c.segment(j * p, p));
    }
    result.perturbation = expand_blocks(blocks, N, problem.hold_length);

    std::vector<Vector> modified(N);
    for (std::size_t k = 0; k < N; ++k) {
        modified[k] = problem.refs.values[k] + result.perturbation[k];
    }
    result.modified = ReferenceProfile(std::move(modified), problem.refs.dt);

    // Predicted trajectory straight from the condensed maps; tests compare it
    // against the step-by-step simulator.
    const Vector forces = qp.force_offset + qp.force_map * c;
    const Vector inputs = qp.input_offset + qp.input_map * c;
    const Vector states = qp.state_offset + qp.state_map * c;
    const Eigen::Index n = problem.sys.state_dim();
    const Eigen::Index m = problem.sys.input_dim();
    result.predicted.dt = problem.refs.dt;
    for (std::size_t k = 0; k <= N; ++k) {
        const Eigen::Index ki = static_cast<Eigen::Index>(k);
        result.predicted.states.push_back(states.segment(ki * n, n));
        result.predicted.outputs.push_back(forces.segment(ki * p, p));
        if (k < N) {
            result.predicted.inputs.push_back(inputs.segment(ki * m, m));
        }
    }

    result.objective = 0.5 * c.dot(qp.hessian * c) + qp.gradient.dot(c) + qp.constant;
    return result;
}

}  // namespace refshape
