#pragma once

#include <vector>

#include "refshape/state_space.hpp"

namespace refshape {

/// Time-indexed force reference sequence. values[k] is the reference handed
/// to the controller over [k*dt, (k+1)*dt). Forces follow the sensor sign
/// convention (extrusion pulls the reading negative).
struct ReferenceProfile {
    std::vector<Vector> values;  // length N >= 1, p-vectors
    double dt = 0.0;

    ReferenceProfile() = default;
    ReferenceProfile(std::vector<Vector> values_, double dt_);

    std::size_t size() const { return values.size(); }

    static ReferenceProfile constant(double value, std::size_t n, double dt);
};

}  // namespace refshape
