#pragma once

#include "starkbec/common.hpp"

namespace starkbec {

class ChiTensor;

/// Laboratory quantities, SI where dimensional. Defaults document the
/// physical tuple used by the fixtures (87Rb in an 850 nm lattice with a
/// 20 um transverse extent), for which N = 7e4 gives g close to 1.
struct LabParams {
    double scattering_length = 5.3e-9;  // a_s [m]
    long atom_count = 70000;            // N
    double transverse_length = 2.0e-5;  // L [m]
    double laser_wavelength = 8.5e-7;   // lambda_L [m]
    double lattice_depth = 5.0;         // V0 [E_R]
    double tilt_force = 0.25;           // F [2 E_R / lambda_L]
};

/// Parameters of the normalized equation of motion. The mass is fixed by the
/// normalization and is not a free field.
struct ModelParams {
    double v0 = 5.0;     // lattice depth [E_R]
    double force = 0.25; // tilt [2 E_R / lambda_L]
    double g = 0.25;     // 1D nonlinear parameter, signed
    double g_max = 1.0;  // validity ceiling for |g| (single-band truncation)

    static constexpr double mass = kLatticeMass;

    void validate() const;
};

/// Parameters of the rescaled action-angle equations. One unit of rescaled
/// time equals time_scale raw time units.
struct RescaledParams {
    double force_rescaled = 0.0; // F / (|g| chi000)
    double sigma_g = 1.0;        // sign of g
    double beta = -1.0;          // chi001 / chi00m1
    double epsilon = 0.0;        // chi00m1 / chi000
    double time_scale = 1.0;     // 1 / (|g| chi000)
    bool epsilon_large = false;  // set when epsilon >= 0.5 (flagged, not rejected)
};

/// g = 8 a_s N / (L^2 k_L) with k_L = 2 pi / lambda_L; v0 and force copy through.
ModelParams lab_to_normalized(const LabParams& lab);

RescaledParams rescale(const ModelParams& params, const ChiTensor& chi);
RescaledParams rescale(const ModelParams& params, double chi000, double chi001,
                       double chi00m1);

}  // namespace starkbec
