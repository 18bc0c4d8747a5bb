#pragma once

#include <optional>
#include <vector>

#include "starkbec/lattice.hpp"

namespace starkbec {

/// Surface-of-section specification. The trigger observable is the angle
/// difference theta_a - theta_b; crossings of 0 (mod 2pi) in the positive
/// direction are recorded as (I of record_well, theta_ra - theta_rb).
/// Launches follow the fixed-action plane: I_{fixed_well} = fixed_action,
/// all angles zero, I_{partner_well} chosen so the actions sum to total_norm.
struct SectionSpec {
    int trigger_well_a = -1;
    int trigger_well_b = 0;
    int record_well = 0;
    int record_well_a = 1;
    int record_well_b = 0;
    int fixed_well = -1;
    double fixed_action = 0.1;
    int partner_well = 1;
    double total_norm = 1.0;
    double crossing_tol = 1e-6;
    int max_crossings = 500;
    double max_time = 5000.0;
    double action_floor = kActionFloor;
};

/// Launch state on the section plane for the given I_{record_well}.
ActionAngleState make_launch(const SectionSpec& spec, double record_action,
                             int well_min, int well_max);

struct OrbitSection {
    double launch_action = 0.0;
    std::vector<double> times;            // rescaled crossing times
    std::vector<double> actions;          // I_{record_well} at crossings
    std::vector<double> angles_wrapped;   // recorded angle in (-pi, pi]
    std::vector<double> angles_unwrapped;
    double max_trigger_residual = 0.0;    // |trigger| at the refined points
    bool terminated_early = false;  // an action needed by the trigger hit the floor
    bool empty = false;             // no crossings within the horizon

    int crossings() const { return static_cast<int>(times.size()); }
    double action_spread() const;
    /// Least-squares slope of the unwrapped recorded angle per crossing, in
    /// turns; NaN with fewer than three crossings.
    double rotation_number() const;
};

struct PoincareSection {
    SectionSpec spec;
    RescaledParams params;
    std::vector<OrbitSection> orbits;
};

/// Integrates each launch in amplitude form on the rescaled clock, detecting
/// trigger crossings by the sign of the unwrapped trigger advance and
/// refining each crossing by a Henon independent-variable exchange step
/// (linear interpolation fallback).
PoincareSection poincare_section(const SectionSpec& spec,
                                 const std::vector<double>& launches,
                                 const LatticeSystem& system,
                                 int crossings_per_orbit, int threads = 0);

struct LyapunovOptions {
    double renorm_interval = 1.0;  // rescaled time between renormalizations
    double delta0 = 1e-8;
    double regular_floor = 1e-3;   // |lambda| below this reads as regular
};

struct LyapunovResult {
    double lambda = 0.0;           // per unit rescaled time
    bool converged = false;
    std::vector<double> trace;     // running estimate at each renormalization
    double horizon = 0.0;
};

/// Benettin two-trajectory estimate of the largest exponent on the rescaled
/// clock. The trace is flagged inconclusive when its last-half spread exceeds
/// half of max(|lambda|, regular_floor).
LyapunovResult lyapunov_max(const ModeState& c0, const LatticeSystem& system,
                            double horizon, LyapunovOptions opts = {});

struct ResonanceLocus {
    int a = 1;
    int b = 1;
    bool exists = false;
    double action = 0.0;     // I_{record well} at the locus
    double partner = 0.0;    // budget - action
};

/// Solves omega_0 / omega_1 = a/b for the integrable frequencies
/// omega_n = -n F_rescaled - sigma_g I_n under the two-well constraint
/// I_1 = budget - I_0. The 1:1 case reduces to F_rescaled = sigma_g (I0 - I1).
ResonanceLocus resonance_locus(int a, int b, const RescaledParams& rp,
                               double budget = 0.9);

struct FrequencyPeak {
    double omega = 0.0;  // c_n(t) ~ exp(i omega t)
    double power = 0.0;
};

struct ModeFrequency {
    int well = 0;
    double omega = 0.0;
    bool ambiguous = false;              // second peak within 3 dB
    std::vector<FrequencyPeak> candidates;
};

/// Dominant spectral peak of c_n(t) per requested well: Hann window, complex
/// DFT, local quadratic interpolation of the log magnitude. Requires uniform
/// sampling and at least 4096 samples.
std::vector<ModeFrequency> mode_frequencies(const Trajectory& traj,
                                            const std::vector<int>& wells);

/// Fits the measured frequency offsets from the Bloch ladder against the mean
/// actions: offset_n = -(omega_n + n F_rescaled) should equal sigma_g I_n.
/// Returns the fitted slope (expected: sigma_g).
double frequency_pulling_slope(const Trajectory& traj,
                               const std::vector<int>& wells,
                               const RescaledParams& rp);

/// Distance of x to the nearest integer (rotation numbers mod 1, symmetric).
double lock_fraction(double x);

/// Number of angular clusters among wrapped angles, splitting at circular
/// gaps larger than min_gap.
int count_angle_clusters(std::vector<double> angles, double min_gap);

struct IslandChain {
    bool found = false;
    double launch_action = 0.0;  // launch inside the locked chain
    double rotation = 0.0;
    int multiplicity = 0;
};

/// Searches [lo, hi] (monotone rotation-number window) for an orbit whose
/// rotation number locks to p/q within tol, then counts its islands.
IslandChain detect_island_chain(const SectionSpec& spec,
                                const LatticeSystem& system, int p, int q,
                                double lo, double hi, double tol = 1e-3,
                                int crossings = 600);

}  // namespace starkbec
