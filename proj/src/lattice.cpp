#include "starkbec/lattice.hpp"

#include <cmath>

namespace starkbec {

using std::complex;
using namespace std::complex_literals;

void LatticeSystem::validate() const {
    if (chi000 <= 0.0)
        throw Error(ErrorCode::InvalidParameter, "chi000 must be positive");
    if (well_max < well_min)
        throw Error(ErrorCode::InvalidParameter, "empty well range");
}

LatticeSystem LatticeSystem::from_chi(const ModelParams& params,
                                      const ChiTensor& chi, int well_min,
                                      int well_max) {
    LatticeSystem s;
    s.params = params;
    s.chi000 = chi.chi000();
    s.chi001 = chi.chi001();
    s.chi00m1 = chi.chi00m1();
    s.well_min = well_min;
    s.well_max = well_max;
    s.validate();
    return s;
}

RescaledParams LatticeSystem::rescaled_params() const {
    return rescale(params, chi000, chi001, chi00m1);
}

LatticeSystem LatticeSystem::rescaled() const {
    const RescaledParams rp = rescaled_params();
    LatticeSystem s = *this;
    s.params.force = rp.force_rescaled;
    s.params.g = rp.sigma_g;
    s.params.g_max = std::max(s.params.g_max, 1.0);
    s.chi000 = 1.0;
    s.chi001 = chi001 / chi000;  // = epsilon * beta, finite even at chi00m1 = 0
    s.chi00m1 = chi00m1 / chi000;
    return s;
}

Eigen::VectorXcd rhs_full(const ModeState& c, const ChiTensor& chi,
                          const ModelParams& params) {
    const int r = chi.cutoff_radius();
    if (r < 2)
        throw Error(ErrorCode::InvalidParameter,
                    "rhs_full needs the chi tensor out to |index| >= 2");
    Eigen::VectorXcd deriv(c.size());
    for (int i = 0; i < c.size(); ++i) {
        const int n = c.well(i);
        complex<double> acc = static_cast<double>(n) * params.force *
                              c.amplitudes[i];
        complex<double> nl = 0.0;
        for (int k = -r; k <= r; ++k) {
            const complex<double> ck = std::conj(c.at_well(n + k));
            if (ck == 0.0) continue;
            for (int l = -r; l <= r; ++l) {
                const complex<double> cl = c.at_well(n + l);
                if (cl == 0.0) continue;
                for (int m = -r; m <= r; ++m) {
                    const double x = chi.chi(k, l, m);
                    if (x == 0.0) continue;
                    nl += x * ck * cl * c.at_well(n + m);
                }
            }
        }
        acc += params.g * nl;
        deriv[i] = -1.0i * acc;
    }
    return deriv;
}

Eigen::VectorXcd rhs_truncated(const ModeState& c, const LatticeSystem& sys) {
    const double g = sys.params.g;
    const double f = sys.params.force;
    Eigen::VectorXcd deriv(c.size());
    for (int i = 0; i < c.size(); ++i) {
        const int n = c.well(i);
        const complex<double> cn = c.amplitudes[i];
        const complex<double> cm = c.at_well(n - 1);
        const complex<double> cp = c.at_well(n + 1);
        const double in = std::norm(cn);
        complex<double> acc = static_cast<double>(n) * f * cn;
        acc += g * sys.chi000 * in * cn;
        acc += g * (sys.chi00m1 * std::conj(cm) + sys.chi001 * std::conj(cp)) *
               (cn * cn);
        acc += g * 2.0 * (sys.chi00m1 * cm + sys.chi001 * cp) * in;
        acc += g * (sys.chi001 * std::norm(cm) * cm + sys.chi00m1 * std::norm(cp) * cp);
        deriv[i] = -1.0i * acc;
    }
    return deriv;
}

double lattice_energy(const ModeState& c, const LatticeSystem& sys) {
    const double g = sys.params.g;
    double h = 0.0;
    for (int i = 0; i < c.size(); ++i) {
        const int n = c.well(i);
        const double in = std::norm(c.amplitudes[i]);
        h += n * sys.params.force * in + 0.5 * g * sys.chi000 * in * in;
        if (c.contains(n + 1)) {
            const double ip = std::norm(c.at_well(n + 1));
            const double re = (std::conj(c.amplitudes[i]) * c.at_well(n + 1)).real();
            h += 2.0 * g * re * (sys.chi001 * in + sys.chi00m1 * ip);
        }
    }
    return h;
}

void pack_modes(const Eigen::VectorXcd& c, Eigen::VectorXd& y) {
    y.resize(2 * c.size());
    for (int i = 0; i < c.size(); ++i) {
        y[2 * i] = c[i].real();
        y[2 * i + 1] = c[i].imag();
    }
}

Eigen::VectorXcd unpack_modes(const Eigen::VectorXd& y) {
    Eigen::VectorXcd c(y.size() / 2);
    for (int i = 0; i < c.size(); ++i) c[i] = {y[2 * i], y[2 * i + 1]};
    return c;
}

OdeRhs make_mode_rhs(const LatticeSystem& sys) {
    const double g = sys.params.g;
    const double f = sys.params.force;
    const double x0 = sys.chi000, xp = sys.chi001, xm = sys.chi00m1;
    const int first_well = sys.well_min;
    return [=](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const int n = static_cast<int>(y.size()) / 2;
        dy.resize(y.size());
        for (int i = 0; i < n; ++i) {
            const complex<double> cn{y[2 * i], y[2 * i + 1]};
            const complex<double> cm =
                i > 0 ? complex<double>{y[2 * i - 2], y[2 * i - 1]} : 0.0;
            const complex<double> cp =
                i + 1 < n ? complex<double>{y[2 * i + 2], y[2 * i + 3]} : 0.0;
            const double in = std::norm(cn);
            complex<double> acc = static_cast<double>(first_well + i) * f * cn;
            acc += g * x0 * in * cn;
            acc += g * (xm * std::conj(cm) + xp * std::conj(cp)) * (cn * cn);
            acc += g * 2.0 * (xm * cm + xp * cp) * in;
            acc += g * (xp * std::norm(cm) * cm + xm * std::norm(cp) * cp);
            dy[2 * i] = acc.imag();
            dy[2 * i + 1] = -acc.real();
        }
    };
}

Trajectory integrate(const ModeState& c0, const LatticeSystem& sys,
                     const std::vector<double>& sample_times, double tol) {
    sys.validate();
    if (tol <= 0.0)
        throw Error(ErrorCode::InvalidParameter, "tolerance must be positive");
    if (c0.first_well < sys.well_min || c0.last_well() > sys.well_max)
        throw Error(ErrorCode::InvalidParameter,
                    "initial state extends outside the retained well range");

    // Embed the state into the full retained range so boundary wells are
    // explicit zeros.
    ModeState c;
    c.first_well = sys.well_min;
    c.time = c0.time;
    c.amplitudes = Eigen::VectorXcd::Zero(sys.size());
    for (int i = 0; i < c0.size(); ++i)
        c.amplitudes[c0.well(i) - sys.well_min] = c0.amplitudes[i];

    const double norm0 = c.norm2();
    const double h0 = lattice_energy(c, sys);
    const double h_scale = std::max(std::abs(h0), 1e-12);

    Trajectory traj;
    traj.first_well = sys.well_min;

    OdeOptions opt;
    opt.rtol = opt.atol = tol;
    // Cap the step at ~1/25 of the O(1)-frequency phase period: keeps the
    // conserved quantities near the requested tolerance over long horizons
    // and leaves angle observables well resolved between accepted steps.
    opt.h_max = 0.25;

    Eigen::VectorXd y;
    pack_modes(c.amplitudes, y);
    auto rhs = make_mode_rhs(sys);

    ModeState probe = c;
    traj.ode = integrate_sampled(
        rhs, y, c.time, sample_times, opt,
        [&](double t, const Eigen::VectorXd& yt) {
            probe.amplitudes = unpack_modes(yt);
            probe.time = t;
            traj.times.push_back(t);
            traj.states.push_back(probe.amplitudes);
            traj.norm_drift =
                std::max(traj.norm_drift, std::abs(probe.norm2() - norm0));
            traj.energy_drift_rel =
                std::max(traj.energy_drift_rel,
                         std::abs(lattice_energy(probe, sys) - h0) / h_scale);
            const double edge = std::norm(probe.amplitudes[0]) +
                                std::norm(probe.amplitudes[probe.size() - 1]);
            traj.edge_population = std::max(traj.edge_population, edge);
        });
    return traj;
}

Trajectory integrate(const ModeState& c0, const LatticeSystem& sys, double t_end,
                     double tol, int n_samples) {
    if (n_samples < 1)
        throw Error(ErrorCode::InvalidParameter, "need at least one sample");
    std::vector<double> ts(n_samples);
    if (n_samples == 1) {
        ts[0] = c0.time;
    } else {
        const double dt = (t_end - c0.time) / (n_samples - 1);
        for (int i = 0; i < n_samples; ++i) ts[i] = c0.time + dt * i;
        ts.back() = t_end;
    }
    return integrate(c0, sys, ts, tol);
}

ActionAngleState to_action_angle(const ModeState& c) {
    ActionAngleState aa;
    aa.first_well = c.first_well;
    aa.time = c.time;
    aa.actions.resize(c.size());
    aa.angles.resize(c.size());
    for (int i = 0; i < c.size(); ++i) {
        aa.actions[i] = std::norm(c.amplitudes[i]);
        // phase of zero is undefined; report 0 by convention
        aa.angles[i] = aa.actions[i] == 0.0
                           ? 0.0
                           : std::arg(c.amplitudes[i]);
    }
    return aa;
}

ModeState from_action_angle(const ActionAngleState& aa) {
    ModeState c;
    c.first_well = aa.first_well;
    c.time = aa.time;
    c.amplitudes.resize(aa.size());
    for (int i = 0; i < aa.size(); ++i) {
        if (aa.actions[i] < 0.0)
            throw Error(ErrorCode::InvalidParameter,
                        "negative action I_" + std::to_string(aa.well(i)));
        c.amplitudes[i] = std::sqrt(aa.actions[i]) *
                          std::exp(1.0i * aa.angles[i]);
    }
    return c;
}

void rhs_action_angle(const ActionAngleState& aa, const RescaledParams& rp,
                      Eigen::VectorXd& dI, Eigen::VectorXd& dTheta) {
    const int n = aa.size();
    dI.resize(n);
    dTheta.resize(n);
    for (int i = 0; i < n; ++i)
        if (aa.actions[i] <= kActionFloor)
            throw Error(ErrorCode::NearSingularAction,
                        "I_" + std::to_string(aa.well(i)) +
                            " at or below the action floor; integrate the "
                            "amplitude form instead");

    const double eps = rp.epsilon, beta = rp.beta, sg = rp.sigma_g,
                 fr = rp.force_rescaled;
    auto I = [&](int i) { return (i >= 0 && i < n) ? aa.actions[i] : 0.0; };
    auto th = [&](int i) { return (i >= 0 && i < n) ? aa.angles[i] : 0.0; };

    for (int i = 0; i < n; ++i) {
        const double in = aa.actions[i];
        const double sq = std::sqrt(in);
        const double ip = I(i + 1), im = I(i - 1);
        const double dp = th(i + 1) - aa.angles[i];
        const double dm = th(i - 1) - aa.angles[i];
        const double up = std::sqrt(ip), um = std::sqrt(im);

        dI[i] = 2.0 * eps * sg * sq *
                (up * (ip + beta * in) * std::sin(dp) +
                 um * (in + beta * im) * std::sin(dm));
        dTheta[i] = -aa.well(i) * fr - sg * in -
                    (eps * sg / sq) * (up * (ip + 3.0 * beta * in) * std::cos(dp) +
                                       um * (3.0 * in + beta * im) * std::cos(dm));
    }
}

double hamiltonian(const ActionAngleState& aa, const RescaledParams& rp) {
    const int n = aa.size();
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        const double in = aa.actions[i];
        if (in < 0.0)
            throw Error(ErrorCode::InvalidParameter, "negative action");
        h += aa.well(i) * rp.force_rescaled * in + 0.5 * rp.sigma_g * in * in;
        if (i + 1 < n) {
            const double ip = aa.actions[i + 1];
            h += 2.0 * rp.sigma_g * rp.epsilon * std::sqrt(in * ip) *
                 (rp.beta * in + ip) * std::cos(aa.angles[i + 1] - aa.angles[i]);
        }
    }
    return h;
}

std::vector<ActionAngleState> integrate_action_angle(
    const ActionAngleState& aa0, const RescaledParams& rp,
    const std::vector<double>& sample_times, double tol) {
    const int n = aa0.size();
    Eigen::VectorXd y(2 * n);
    y.head(n) = aa0.actions;
    y.tail(n) = aa0.angles;

    ActionAngleState work = aa0;
    Eigen::VectorXd dI, dTheta;
    auto rhs = [&](double, const Eigen::VectorXd& yv, Eigen::VectorXd& dy) {
        work.actions = yv.head(n);
        work.angles = yv.tail(n);
        rhs_action_angle(work, rp, dI, dTheta);
        dy.resize(2 * n);
        dy.head(n) = dI;
        dy.tail(n) = dTheta;
    };

    OdeOptions opt;
    opt.rtol = opt.atol = tol;
    opt.h_max = 0.25;
    std::vector<ActionAngleState> out;
    integrate_sampled(rhs, y, aa0.time, sample_times, opt,
                      [&](double t, const Eigen::VectorXd& yt) {
                          ActionAngleState s = aa0;
                          s.time = t;
                          s.actions = yt.head(n);
                          s.angles = yt.tail(n);
                          out.push_back(std::move(s));
                      });
    return out;
}

ActionAngleState integrable_solution(const ActionAngleState& aa0,
                                     const RescaledParams& rp, double t) {
    ActionAngleState s = aa0;
    s.time = aa0.time + t;
    for (int i = 0; i < aa0.size(); ++i) {
        const double omega =
            -aa0.well(i) * rp.force_rescaled - rp.sigma_g * aa0.actions[i];
        s.angles[i] = aa0.angles[i] + omega * t;
    }
    return s;
}

}  // namespace starkbec
