#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace starkbec {

// Normalized units throughout: length in lattice periods d, energy in recoil
// units E_R, time in hbar/E_R, force in 2E_R/lambda_L. The particle mass in
// these units is pi^2/2 and hbar = 1.
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLatticeMass = kPi * kPi / 2.0;

enum class ErrorCode {
    InvalidParameter,
    RescalingUndefined,
    NoLocalizedBand,
    BoxTooSmall,
    StepSize,
    BoxLeak,
    IncompatibleGrid,
    Stiffness,
    NearSingularAction,
    NotApplicable,
    InvalidLaunch,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// 17 significant digits round-trip an IEEE double exactly; all file output
// goes through this so reruns are byte-identical.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline double wrap_angle(double theta) {
    // wrap to (-pi, pi]
    double w = std::remainder(theta, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

}  // namespace starkbec
