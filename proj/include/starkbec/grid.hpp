#pragma once

#include <cmath>

namespace starkbec {

/// Uniform spatial grid over the bounding box [x_lo, x_lo + length).
/// The left wall sits at x_lo; the right wall x_lo + length coincides with
/// the first point of the periodic continuation and is not stored.
struct Grid {
    double x_lo = 0.0;
    double spacing = 0.0;
    int size = 0;

    double x(int i) const { return x_lo + spacing * i; }
    double length() const { return spacing * size; }

    bool compatible(const Grid& other) const {
        return size == other.size && std::abs(x_lo - other.x_lo) < 1e-12 &&
               std::abs(spacing - other.spacing) < 1e-15;
    }
};

}  // namespace starkbec
