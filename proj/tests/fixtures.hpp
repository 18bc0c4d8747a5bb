#pragma once

#include "starkbec/gpe.hpp"
#include "starkbec/lattice.hpp"
#include "starkbec/units.hpp"
#include "starkbec/ws_basis.hpp"

namespace starkbec::test {

// Figure parameters of the study: V0 = 5, F = 0.25, g = 0.25.
inline ModelParams fig_params() {
    ModelParams p;
    p.v0 = 5.0;
    p.force = 0.25;
    p.g = 0.25;
    return p;
}

// One shared basis per test binary; construction costs a few hundred ms.
inline const WsBasis& fig_basis() {
    static const WsBasis basis = solve_ws_states(fig_params(), BoundingBox{});
    return basis;
}

inline const ChiTensor& fig_chi() {
    static const ChiTensor chi = chi_tensor(fig_basis(), 3);
    return chi;
}

inline LatticeSystem fig_system(int well_min, int well_max) {
    return LatticeSystem::from_chi(fig_params(), fig_chi(), well_min, well_max);
}

// Paper footnote values for V0 = 5, F = 0.25 (two decimals).
inline constexpr double kChi000Ref = 1.99;
inline constexpr double kChi001Ref = -0.16;
inline constexpr double kChi00m1Ref = 0.15;

}  // namespace starkbec::test
