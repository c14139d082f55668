#include "refshape/fixture.hpp"

#include <cmath>
#include <sstream>

namespace refshape::fixture {

StateSpace system() {
    Matrix A(3, 3);
    A << 1.00603451, 0.01305934, 0.0357625,
         0.00625487, 1.01087517, 0.0192488,
        -0.33079381, -0.7101034, 0.5566053;
    Matrix B(3, 1);
    B << 0.00008626, -0.00008873, 0.0047217;
    Matrix C(1, 3);
    C << -27.8759035, 0.22352502, -0.04037422;
    return StateSpace(A, B, C, 0.01);
}

LqrWeights weights() {
    Matrix Q = Matrix::Zero(3, 3);
    Q.diagonal() << 1656.2, 8.9, 1.6;
    Matrix R(1, 1);
    R << 0.00995;
    return LqrWeights(Q, R);
}

Matrix reference_gain() {
    Matrix K(1, 3);
    K << 323.8591, -113.4687, 23.2255;
    return K;
}

}  // namespace refshape::fixture

namespace refshape {

bool FixtureReport::all_pass() const {
    for (const FixtureCheck& c : checks) {
        if (!c.ran || !c.pass) return false;
    }
    return true;
}

std::string FixtureReport::to_string() const {
    std::ostringstream out;
    for (const FixtureCheck& c : checks) {
        out << '[' << (!c.ran ? "SKIP" : c.pass ? "PASS" : "FAIL") << "] " << c.name;
        if (!c.detail.empty()) out << ": " << c.detail;
        out << '\n';
    }
    return out.str();
}

FixtureReport verify_fixture(const StateSpace& sys, const LqrWeights& weights,
                             const Matrix& expected_gain) {
    FixtureReport report;
    FixtureCheck solve_check{"riccati solve", false, false, ""};
    FixtureCheck residual_check{"riccati residual", false, false, ""};
    FixtureCheck gain_check{"gain vs reference (1e-3 relative per entry)", false, false, ""};
    FixtureCheck stability_check{"closed-loop spectral radius < 1", false, false, ""};

    try {
        const LqrDesign design = solve_dare(sys, weights);
        solve_check.ran = true;
        solve_check.pass = true;

        const double residual = dare_residual(sys, weights, design.P);
        residual_check.ran = true;
        residual_check.pass = residual < 1e-8 * std::max(1.0, design.P.norm());
        {
            std::ostringstream d;
            d << "residual " << residual;
            residual_check.detail = d.str();
        }

        gain_check.ran = true;
        gain_check.pass = true;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < expected_gain.size(); ++i) {
            const double rel = std::abs(design.K(i) - expected_gain(i)) /
                               std::max(std::abs(expected_gain(i)), 1e-30);
            worst = std::max(worst, rel);
            if (rel > 1e-3) gain_check.pass = false;
        }
        {
            std::ostringstream d;
            d << "computed [";
            for (Eigen::Index i = 0; i < design.K.size(); ++i) {
                d << (i ? ", " : "") << design.K(i);
            }
            d << "], expected [";
            for (Eigen::Index i = 0; i < expected_gain.size(); ++i) {
                d << (i ? ", " : "") << expected_gain(i);
            }
            d << "], worst relative error " << worst;
            gain_check.detail = d.str();
        }

        const double rho = spectral_radius(sys.A - sys.B * design.K);
        stability_check.ran = true;
        stability_check.pass = rho < 1.0;
        {
            std::ostringstream d;
            d << "spectral radius " << rho;
            stability_check.detail = d.str();
        }
    } catch (const std::exception& e) {
        if (!solve_check.ran) {
            solve_check.ran = true;
            solve_check.pass = false;
            solve_check.detail = e.what();
        }
    }

    report.checks = {solve_check, residual_check, gain_check, stability_check};
    return report;
}

FixtureReport verify_fixture() {
    return verify_fixture(fixture::system(), fixture::weights(), fixture::reference_gain());
}

}  // namespace refshape
