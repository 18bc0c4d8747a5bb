#include "starkbec/units.hpp"

#include <cmath>

#include "starkbec/ws_basis.hpp"

namespace starkbec {

void ModelParams::validate() const {
    if (std::abs(g) > g_max)
        throw Error(ErrorCode::InvalidParameter,
                    "|g| = " + format_full(std::abs(g)) +
                        " exceeds the single-band ceiling g_max = " +
                        format_full(g_max));
}

ModelParams lab_to_normalized(const LabParams& lab) {
    if (lab.scattering_length <= 0.0 || lab.transverse_length <= 0.0 ||
        lab.laser_wavelength <= 0.0)
        throw Error(ErrorCode::InvalidParameter,
                    "lab lengths must be positive");
    if (lab.atom_count < 0)
        throw Error(ErrorCode::InvalidParameter, "atom_count must be >= 0");

    const double k_l = 2.0 * kPi / lab.laser_wavelength;
    ModelParams p;
    p.v0 = lab.lattice_depth;
    p.force = lab.tilt_force;
    p.g = 8.0 * lab.scattering_length * static_cast<double>(lab.atom_count) /
          (lab.transverse_length * lab.transverse_length * k_l);
    return p;
}

RescaledParams rescale(const ModelParams& params, double chi000, double chi001,
                       double chi00m1) {
    if (params.g == 0.0)
        throw Error(ErrorCode::RescalingUndefined,
                    "g = 0 is the integrable linear case; use raw units");
    if (chi000 <= 0.0)
        throw Error(ErrorCode::InvalidParameter, "chi000 must be positive");

    RescaledParams r;
    r.sigma_g = params.g > 0.0 ? 1.0 : -1.0;
    r.time_scale = 1.0 / (std::abs(params.g) * chi000);
    r.force_rescaled = params.force * r.time_scale;
    // beta is degenerate in the decoupled limit; every coupling term carries
    // epsilon * beta = chi001/chi000, so 0 is the consistent value there.
    r.beta = chi00m1 != 0.0 ? chi001 / chi00m1 : 0.0;
    r.epsilon = chi00m1 / chi000;
    r.epsilon_large = std::abs(r.epsilon) >= 0.5;
    return r;
}

RescaledParams rescale(const ModelParams& params, const ChiTensor& chi) {
    return rescale(params, chi.chi000(), chi.chi001(), chi.chi00m1());
}

}  // namespace starkbec
