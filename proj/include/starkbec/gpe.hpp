#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "starkbec/grid.hpp"
#include "starkbec/lattice.hpp"
#include "starkbec/units.hpp"
#include "starkbec/ws_basis.hpp"

namespace starkbec {

/// Condensate wavefunction sampled on the bounding-box grid.
struct Field {
    Eigen::VectorXcd samples;
    Grid grid;
    double time = 0.0;

    double norm2(const Grid& g) const { return g.spacing * samples.squaredNorm(); }
    double norm2() const { return norm2(grid); }
};

struct GpeOptions {
    double split_err_tol = 1e-6;  // doubled-step comparison, per step
    double norm_tol = 1e-8;
    double leak_warn = 1e-4;   // population within 2 wells of a wall
    double leak_error = 1e-2;
    int leak_check_stride = 200;  // steps between wall-margin checks
    int max_halvings = 12;
};

struct GpeDiagnostics {
    double dt_used = 0.0;
    long steps = 0;
    double norm_drift = 0.0;
    double max_leak = 0.0;
    bool leak_warning = false;
    std::vector<std::string> warnings;
};

/// Split-step spectral propagator for the normalized 1D GPE
///   i dpsi/dt = [-(1/2m) d2/dx2 + v0 cos(2 pi x) + F x + g |psi|^2] psi .
/// The kinetic half-steps act in the periodic momentum representation of the
/// box; the wall margin buffers the field from the periodic wrap and a leak
/// monitor guards the approximation.
class GpeEvolver {
public:
    GpeEvolver(const Grid& grid, const ModelParams& params, GpeOptions opts = {});
    ~GpeEvolver();
    GpeEvolver(const GpeEvolver&) = delete;
    GpeEvolver& operator=(const GpeEvolver&) = delete;

    /// L2 distance between one dt step and two dt/2 steps from `field`.
    double split_step_error(const Field& field, double dt) const;

    /// Advances in place by steps * dt with leak and norm monitoring.
    void advance(Field& field, double dt, long steps);

    const GpeDiagnostics& diagnostics() const { return diag_; }
    GpeDiagnostics& diagnostics() { return diag_; }
    double wall_leak(const Field& field) const;

private:
    void step(Eigen::VectorXcd& psi, double dt) const;
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Grid grid_;
    ModelParams params_;
    GpeOptions opts_;
    GpeDiagnostics diag_;
};

/// Advances the field by steps * dt using symmetric splitting (half kinetic,
/// full potential + nonlinear, half kinetic). If the doubled-step comparison
/// at the initial state exceeds the configured tolerance the step is halved
/// (and the count doubled) until it passes.
Field evolve_gpe(const Field& field, const ModelParams& params, double dt,
                 long steps, GpeOptions opts = {},
                 GpeDiagnostics* diag_out = nullptr);

/// c_n = <phi_n|psi> by grid quadrature.
ModeState project_to_ws(const Field& field, const WsBasis& basis);

/// sum_n |c_n|^2 -- the weight captured by the single-band expansion.
double completeness(const Field& field, const WsBasis& basis);

/// Energy functional: kinetic (spectral) + potential + (g/2)|psi|^4 terms.
double gpe_energy(const Field& field, const ModelParams& params);

/// Builds a normalized field from WS-state amplitudes.
Field field_from_modes(const ModeState& modes, const WsBasis& basis);

}  // namespace starkbec
