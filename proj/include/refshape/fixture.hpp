#pragma once

#include <string>
#include <vector>

#include "refshape/lqr.hpp"
#include "refshape/state_space.hpp"

namespace refshape::fixture {

/// Identified 3-state extrusion model of the bundled desk printer
/// (RPM command in, roller reaction force out, 100 Hz).
StateSpace system();

/// LQR weights accompanying the identified model.
LqrWeights weights();

/// Published gain the bundled model's controller is compared against.
Matrix reference_gain();

}  // namespace refshape::fixture

namespace refshape {

struct FixtureCheck {
    std::string name;
    bool ran = false;
    bool pass = false;
    std::string detail;
};

struct FixtureReport {
    std::vector<FixtureCheck> checks;
    bool all_pass() const;
    std::string to_string() const;
};

/// Recompute the gain from (sys, weights) and compare against expected_gain
/// entrywise at 1e-3 relative; also check the Riccati residual and
/// closed-loop stability. Never throws; failures land in the report.
FixtureReport verify_fixture(const StateSpace& sys, const LqrWeights& weights,
                             const Matrix& expected_gain);

/// The bundled fixture against its published gain.
FixtureReport verify_fixture();

}  // namespace refshape
