#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "starkbec/common.hpp"
#include "starkbec/ode.hpp"
#include "starkbec/units.hpp"
#include "starkbec/ws_basis.hpp"

namespace starkbec {

/// Complex mode amplitudes c_n over a contiguous well range.
struct ModeState {
    Eigen::VectorXcd amplitudes;
    int first_well = 0;
    double time = 0.0;

    int size() const { return static_cast<int>(amplitudes.size()); }
    int well(int i) const { return first_well + i; }
    int last_well() const { return first_well + size() - 1; }
    bool contains(int n) const { return n >= first_well && n <= last_well(); }
    std::complex<double> at_well(int n) const {
        return contains(n) ? amplitudes[n - first_well] : std::complex<double>(0.0);
    }
    double norm2() const { return amplitudes.squaredNorm(); }
};

/// (I_n, theta_n) representation, c_n = sqrt(I_n) exp(i theta_n). Angles are
/// stored unwrapped; wrapping happens only at presentation time.
struct ActionAngleState {
    Eigen::VectorXd actions;
    Eigen::VectorXd angles;
    int first_well = 0;
    double time = 0.0;

    int size() const { return static_cast<int>(actions.size()); }
    int well(int i) const { return first_well + i; }
};

/// Nearest-neighbor discrete model: tilt, on-site chi000 and the chi00+-1
/// neighbor couplings, over a fixed retained well range. Wells outside the
/// range carry c = 0 permanently.
struct LatticeSystem {
    ModelParams params;
    double chi000 = 0.0;
    double chi001 = 0.0;
    double chi00m1 = 0.0;
    int well_min = 0;
    int well_max = 0;

    void validate() const;
    int size() const { return well_max - well_min + 1; }

    static LatticeSystem from_chi(const ModelParams& params, const ChiTensor& chi,
                                  int well_min, int well_max);

    /// Same dynamics on the rescaled clock tau = t / time_scale: coefficients
    /// become F -> F_r, g -> sigma_g, chi -> (1, eps*beta, eps).
    LatticeSystem rescaled() const;
    RescaledParams rescaled_params() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXcd> states;
    int first_well = 0;
    double norm_drift = 0.0;        // max |sum I_n - initial|
    double energy_drift_rel = 0.0;  // max |H - H0| / max(|H0|, 1e-12)
    double edge_population = 0.0;   // max population seen on the outermost wells
    OdeDiagnostics ode;

    Eigen::VectorXd actions_at(std::size_t sample) const {
        return states[sample].cwiseAbs2();
    }
};

/// Full coupled equations: i dc_n/dt = n F c_n
///   + g sum_{klm} chi_{klm} conj(c_{n+k}) c_{n+l} c_{n+m},
/// with the sum over all ordered triples inside the tensor cutoff.
Eigen::VectorXcd rhs_full(const ModeState& c, const ChiTensor& chi,
                          const ModelParams& params);

/// Nearest-neighbor truncation (on-site + chi00+-1 couplings only).
Eigen::VectorXcd rhs_truncated(const ModeState& c, const LatticeSystem& system);

/// Conserved energy of the truncated flow, evaluated on amplitudes:
/// H = sum_n [ n F I_n + (g chi000/2) I_n^2
///           + 2 g Re(conj(c_n) c_{n+1}) (chi001 I_n + chi00m1 I_{n+1}) ].
double lattice_energy(const ModeState& c, const LatticeSystem& system);

/// Adaptive Dormand-Prince integration of the truncated model in amplitude
/// form, sampling at the requested times (which must start at or after
/// c0.time). Records norm and energy drift diagnostics.
Trajectory integrate(const ModeState& c0, const LatticeSystem& system,
                     const std::vector<double>& sample_times, double tol);

/// Convenience overload: n_samples uniform samples over [c0.time, t_end].
Trajectory integrate(const ModeState& c0, const LatticeSystem& system,
                     double t_end, double tol, int n_samples);

/// Flat real packing used by the ODE drivers: re/im interleaved.
void pack_modes(const Eigen::VectorXcd& c, Eigen::VectorXd& y);
Eigen::VectorXcd unpack_modes(const Eigen::VectorXd& y);

/// Allocation-free truncated RHS on the packed representation; the state must
/// span the system's full retained range starting at well_min.
OdeRhs make_mode_rhs(const LatticeSystem& system);

ActionAngleState to_action_angle(const ModeState& c);
ModeState from_action_angle(const ActionAngleState& aa);

inline constexpr double kActionFloor = 1e-8;

/// Right-hand sides of the rescaled action-angle equations. Requires every
/// action above kActionFloor (the angle equation carries 1/sqrt(I_n)); use
/// the amplitude form otherwise.
void rhs_action_angle(const ActionAngleState& aa, const RescaledParams& rp,
                      Eigen::VectorXd& dI, Eigen::VectorXd& dTheta);

/// H = sum_n [ n F I_n + (sigma_g/2) I_n^2
///           + 2 sigma_g eps sqrt(I_n I_{n+1}) (beta I_n + I_{n+1})
///             cos(theta_{n+1} - theta_n) ]   (rescaled clock)
double hamiltonian(const ActionAngleState& aa, const RescaledParams& rp);

/// Integrates the action-angle form directly (rescaled clock); for analysis
/// and cross-checks, not production runs.
std::vector<ActionAngleState> integrate_action_angle(
    const ActionAngleState& aa0, const RescaledParams& rp,
    const std::vector<double>& sample_times, double tol);

/// Closed-form solution of the integrable (eps = 0) limit:
/// I_n(t) = I_n(0), theta_n(t) = theta_n(0) + omega_n t with
/// omega_n = -n F_rescaled - sigma_g I_n(0).
ActionAngleState integrable_solution(const ActionAngleState& aa0,
                                     const RescaledParams& rp, double t);

}  // namespace starkbec
