#include "starkbec/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <thread>

#include <fftw3.h>

namespace starkbec {

using std::complex;

ActionAngleState make_launch(const SectionSpec& spec, double record_action,
                             int well_min, int well_max) {
    ActionAngleState aa;
    aa.first_well = well_min;
    const int n = well_max - well_min + 1;
    aa.actions = Eigen::VectorXd::Zero(n);
    aa.angles = Eigen::VectorXd::Zero(n);
    auto idx = [&](int w) {
        if (w < well_min || w > well_max)
            throw Error(ErrorCode::InvalidLaunch,
                        "section well " + std::to_string(w) +
                            " outside the retained range");
        return w - well_min;
    };
    const double partner =
        spec.total_norm - spec.fixed_action - record_action;
    if (record_action <= 0.0 || partner <= 0.0 || spec.fixed_action < 0.0)
        throw Error(ErrorCode::InvalidLaunch,
                    "launch I = " + format_full(record_action) +
                        " leaves no positive partner action under the "
                        "normalization constraint");
    aa.actions[idx(spec.fixed_well)] = spec.fixed_action;
    aa.actions[idx(spec.record_well)] = record_action;
    aa.actions[idx(spec.partner_well)] = partner;
    if (std::abs(aa.actions.sum() - spec.total_norm) > 1e-12)
        throw Error(ErrorCode::InvalidLaunch, "launch violates normalization");
    return aa;
}

double OrbitSection::action_spread() const {
    if (actions.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(actions.begin(), actions.end());
    return *hi - *lo;
}

double OrbitSection::rotation_number() const {
    const int n = crossings();
    if (n < 3) return std::numeric_limits<double>::quiet_NaN();
    // least-squares slope of unwrapped angle vs crossing index
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int j = 0; j < n; ++j) {
        sx += j;
        sy += angles_unwrapped[j];
        sxx += static_cast<double>(j) * j;
        sxy += j * angles_unwrapped[j];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return slope / (2.0 * kPi);
}

namespace {

struct AngleTracker {
    int ia_re, ib_re;  // packed indices of the two wells' real parts
    double unwrapped = 0.0;
    double last_wrapped = 0.0;

    static double wrapped_of(const Eigen::VectorXd& y, int a_re, int b_re) {
        const double ta = std::atan2(y[a_re + 1], y[a_re]);
        const double tb = std::atan2(y[b_re + 1], y[b_re]);
        return wrap_angle(ta - tb);
    }
    void init(const Eigen::VectorXd& y) {
        last_wrapped = wrapped_of(y, ia_re, ib_re);
        unwrapped = last_wrapped;
    }
    // steps are capped well below pi/rate, so per-step advances unwrap safely
    double advance(const Eigen::VectorXd& y) {
        const double w = wrapped_of(y, ia_re, ib_re);
        unwrapped += wrap_angle(w - last_wrapped);
        last_wrapped = w;
        return unwrapped;
    }
};

// Henon exchange: RK4 on dy/du = f(y)/du_dt(y), substepped so the trigger
// angle advances at most ~0.03 rad per substep (keeps the refined point's
// actions at the 1e-9 level).
bool henon_refine(const OdeRhs& rhs, const Eigen::VectorXd& y_from,
                  double t_from, int ia_re, int ib_re, double du,
                  Eigen::VectorXd& y_out, double& t_out) {
    Eigen::VectorXd f(y_from.size());
    auto slope = [&](const Eigen::VectorXd& y, Eigen::VectorXd& g, double& dt_du) {
        rhs(0.0, y, f);
        const double ia = y[ia_re] * y[ia_re] + y[ia_re + 1] * y[ia_re + 1];
        const double ib = y[ib_re] * y[ib_re] + y[ib_re + 1] * y[ib_re + 1];
        // d theta/dt = (re * d im - im * d re) / I
        const double dta =
            (y[ia_re] * f[ia_re + 1] - y[ia_re + 1] * f[ia_re]) / ia;
        const double dtb =
            (y[ib_re] * f[ib_re + 1] - y[ib_re + 1] * f[ib_re]) / ib;
        const double udot = dta - dtb;
        if (std::abs(udot) < 1e-9 || ia < 1e-14 || ib < 1e-14) return false;
        dt_du = 1.0 / udot;
        g = f * dt_du;
        return true;
    };

    const int n_sub =
        std::max(1, static_cast<int>(std::ceil(std::abs(du) / 0.03)));
    const double step = du / n_sub;
    y_out = y_from;
    t_out = t_from;
    Eigen::VectorXd k1, k2, k3, k4;
    double s1, s2, s3, s4;
    for (int s = 0; s < n_sub; ++s) {
        if (!slope(y_out, k1, s1)) return false;
        if (!slope(y_out + 0.5 * step * k1, k2, s2)) return false;
        if (!slope(y_out + 0.5 * step * k2, k3, s3)) return false;
        if (!slope(y_out + step * k3, k4, s4)) return false;
        y_out += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t_out += (step / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
    }
    return true;
}

OrbitSection run_orbit(const SectionSpec& spec, double launch_action,
                       const LatticeSystem& rescaled_sys, int max_crossings) {
    OrbitSection orbit;
    orbit.launch_action = launch_action;

    ActionAngleState aa = make_launch(spec, launch_action,
                                      rescaled_sys.well_min,
                                      rescaled_sys.well_max);
    ModeState c0 = from_action_angle(aa);
    Eigen::VectorXd y0;
    pack_modes(c0.amplitudes, y0);

    auto rhs = make_mode_rhs(rescaled_sys);
    OdeOptions opt;
    opt.rtol = opt.atol = 1e-10;
    opt.h_max = 0.25;
    Dop853 drv(rhs, y0, 0.0, opt);

    const int base = rescaled_sys.well_min;
    auto re_idx = [&](int w) { return 2 * (w - base); };
    AngleTracker trig{re_idx(spec.trigger_well_a), re_idx(spec.trigger_well_b)};
    AngleTracker rec{re_idx(spec.record_well_a), re_idx(spec.record_well_b)};
    trig.init(drv.y());
    rec.init(drv.y());
    const int rec_re = re_idx(spec.record_well);

    const std::vector<int> floor_wells = {spec.trigger_well_a,
                                          spec.trigger_well_b, spec.record_well,
                                          spec.record_well_a, spec.record_well_b};

    Eigen::VectorXd y_prev = drv.y();
    double t_prev = 0.0;
    double trig_prev = trig.unwrapped;
    double rec_prev = rec.unwrapped;
    bool done = false;

    while (!done && drv.t() < spec.max_time &&
           orbit.crossings() < max_crossings) {
        const double t_target = std::min(drv.t() + 20.0, spec.max_time);
        drv.advance_to(t_target, [&](double t, const Eigen::VectorXd& yv) {
            if (done) return;
            const double trig_now = trig.advance(yv);
            const double rec_now = rec.advance(yv);

            for (int w : floor_wells) {
                const int r = re_idx(w);
                if (yv[r] * yv[r] + yv[r + 1] * yv[r + 1] < spec.action_floor) {
                    orbit.terminated_early = true;
                    done = true;
                    return;
                }
            }

            if (trig_now > trig_prev && t_prev >= 0.0) {
                // upward passages of multiples of 2 pi strictly inside
                const double k_lo = std::ceil(trig_prev / (2.0 * kPi) - 1e-12);
                const double k_hi = std::floor(trig_now / (2.0 * kPi) + 1e-12);
                for (double k = k_lo; k <= k_hi && orbit.crossings() < max_crossings;
                     k += 1.0) {
                    const double target = 2.0 * kPi * k;
                    if (target <= trig_prev || target > trig_now) continue;
                    // Henon exchange from the step start, then Newton-style
                    // re-steps on the residual (wrap(target) is exactly 0).
                    Eigen::VectorXd yc = y_prev;
                    double tc = t_prev;
                    double u_cur = trig_prev;
                    bool ok = true;
                    for (int it = 0; it < 4; ++it) {
                        const double du = target - u_cur;
                        if (std::abs(du) <= 0.1 * spec.crossing_tol) break;
                        Eigen::VectorXd yn;
                        double tn;
                        if (!henon_refine(rhs, yc, tc, trig.ia_re, trig.ib_re,
                                          du, yn, tn)) {
                            ok = false;
                            break;
                        }
                        yc = yn;
                        tc = tn;
                        u_cur = target + wrap_angle(AngleTracker::wrapped_of(
                                             yc, trig.ia_re, trig.ib_re));
                    }
                    double resid = ok ? wrap_angle(AngleTracker::wrapped_of(
                                            yc, trig.ia_re, trig.ib_re))
                                      : 0.0;
                    if (!ok || std::abs(resid) > spec.crossing_tol) {
                        const double f = (target - trig_prev) / (trig_now - trig_prev);
                        yc = y_prev + f * (yv - y_prev);
                        tc = t_prev + f * (t - t_prev);
                        resid = wrap_angle(AngleTracker::wrapped_of(
                            yc, trig.ia_re, trig.ib_re));
                    }
                    orbit.max_trigger_residual =
                        std::max(orbit.max_trigger_residual, std::abs(resid));
                    const double rec_w =
                        AngleTracker::wrapped_of(yc, rec.ia_re, rec.ib_re);
                    const double rec_u =
                        rec_prev + wrap_angle(rec_w -
                                              AngleTracker::wrapped_of(
                                                  y_prev, rec.ia_re, rec.ib_re));
                    orbit.times.push_back(tc);
                    orbit.actions.push_back(yc[rec_re] * yc[rec_re] +
                                            yc[rec_re + 1] * yc[rec_re + 1]);
                    orbit.angles_wrapped.push_back(wrap_angle(rec_w));
                    orbit.angles_unwrapped.push_back(rec_u);
                }
            }
            y_prev = yv;
            t_prev = t;
            trig_prev = trig_now;
            rec_prev = rec_now;
        });
        if (orbit.crossings() >= max_crossings) done = true;
        if (drv.t() >= spec.max_time) done = true;
    }
    orbit.empty = orbit.times.empty();
    return orbit;
}

void parallel_for(int count, int threads, const std::function<void(int)>& work) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) work(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                work(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

PoincareSection poincare_section(const SectionSpec& spec,
                                 const std::vector<double>& launches,
                                 const LatticeSystem& system,
                                 int crossings_per_orbit, int threads) {
    system.validate();
    PoincareSection out;
    out.spec = spec;
    out.params = system.rescaled_params();
    const LatticeSystem rs = system.rescaled();
    const int max_cross =
        std::min(crossings_per_orbit, spec.max_crossings);

    out.orbits.resize(launches.size());
    // validate launches up front so errors surface before the fan-out
    for (double l : launches)
        make_launch(spec, l, rs.well_min, rs.well_max);

    std::vector<std::exception_ptr> errors(launches.size());
    parallel_for(static_cast<int>(launches.size()), threads, [&](int i) {
        try {
            out.orbits[i] = run_orbit(spec, launches[i], rs, max_cross);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

LyapunovResult lyapunov_max(const ModeState& c0, const LatticeSystem& system,
                            double horizon, LyapunovOptions opts) {
    if (horizon < 100.0 * opts.renorm_interval)
        throw Error(ErrorCode::InvalidParameter,
                    "horizon must cover at least 100 renormalization intervals");
    const LatticeSystem rs = system.rescaled();

    ModeState full;
    full.first_well = rs.well_min;
    full.amplitudes = Eigen::VectorXcd::Zero(rs.size());
    for (int i = 0; i < c0.size(); ++i) {
        if (c0.well(i) < rs.well_min || c0.well(i) > rs.well_max)
            throw Error(ErrorCode::InvalidParameter,
                        "state extends outside the retained well range");
        full.amplitudes[c0.well(i) - rs.well_min] = c0.amplitudes[i];
    }

    Eigen::VectorXd y0;
    pack_modes(full.amplitudes, y0);
    const auto n = y0.size();
    Eigen::VectorXd big(2 * n);
    big << y0, y0;
    big[n + std::min<Eigen::Index>(2, n - 1)] += opts.delta0;

    auto rhs = make_mode_rhs(rs);
    Eigen::VectorXd da(n), db(n);
    auto rhs2 = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(2 * n);
        rhs(t, y.head(n), da);
        rhs(t, y.tail(n), db);
        dy.head(n) = da;
        dy.tail(n) = db;
    };

    OdeOptions opt;
    opt.rtol = opt.atol = 1e-10;
    opt.h_max = 0.25;
    Dop853 drv(rhs2, big, 0.0, opt);

    LyapunovResult res;
    res.horizon = horizon;
    double sum = 0.0;
    const long intervals = std::lround(horizon / opts.renorm_interval);
    for (long k = 1; k <= intervals; ++k) {
        drv.advance_to(k * opts.renorm_interval);
        auto& y = drv.y_mutable();
        Eigen::VectorXd diff = y.tail(n) - y.head(n);
        const double d = diff.norm();
        sum += std::log(d / opts.delta0);
        y.tail(n) = y.head(n) + diff * (opts.delta0 / d);
        drv.resync();
        res.trace.push_back(sum / (k * opts.renorm_interval));
    }
    res.lambda = res.trace.back();

    double lo = res.trace.back(), hi = lo;
    for (std::size_t i = res.trace.size() / 2; i < res.trace.size(); ++i) {
        lo = std::min(lo, res.trace[i]);
        hi = std::max(hi, res.trace[i]);
    }
    res.converged =
        (hi - lo) <= 0.5 * std::max(std::abs(res.lambda), opts.regular_floor);
    return res;
}

ResonanceLocus resonance_locus(int a, int b, const RescaledParams& rp,
                               double budget) {
    if (a <= 0 || b <= 0 || std::gcd(a, b) != 1)
        throw Error(ErrorCode::InvalidParameter,
                    "(a, b) must be coprime positive integers");
    ResonanceLocus loc;
    loc.a = a;
    loc.b = b;
    // omega_0 / omega_1 = a/b with omega_0 = -sigma I0,
    // omega_1 = -F_r - sigma (budget - I0)
    const double i0 =
        a * (rp.sigma_g * rp.force_rescaled + budget) / (a + b);
    loc.action = i0;
    loc.partner = budget - i0;
    loc.exists = i0 > 0.0 && i0 < budget;
    return loc;
}

namespace {

struct Spectrum {
    std::vector<double> omega;  // signed angular frequencies
    std::vector<double> power;
};

Spectrum windowed_spectrum(const std::vector<complex<double>>& samples, double dt) {
    const int n = static_cast<int>(samples.size());
    fftw_complex* buf = fftw_alloc_complex(n);
    auto* b = reinterpret_cast<complex<double>*>(buf);
    for (int j = 0; j < n; ++j) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * j / n);  // Hann
        b[j] = w * samples[j];
    }
    fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    Spectrum s;
    s.omega.resize(n);
    s.power.resize(n);
    for (int k = 0; k < n; ++k) {
        const int ks = k <= n / 2 ? k : k - n;
        // X_k peaks where c ~ exp(+i 2 pi k t / (n dt))
        s.omega[k] = 2.0 * kPi * ks / (n * dt);
        s.power[k] = std::norm(b[k]);
    }
    fftw_destroy_plan(plan);
    fftw_free(buf);
    return s;
}

}  // namespace

std::vector<ModeFrequency> mode_frequencies(const Trajectory& traj,
                                            const std::vector<int>& wells) {
    const int n = static_cast<int>(traj.times.size());
    if (n < 4096)
        throw Error(ErrorCode::InvalidParameter,
                    "need at least 4096 samples, got " + std::to_string(n));
    const double dt = traj.times[1] - traj.times[0];
    for (int j = 1; j < n; ++j)
        if (std::abs(traj.times[j] - traj.times[j - 1] - dt) > 1e-9 * dt)
            throw Error(ErrorCode::InvalidParameter,
                        "trajectory is not uniformly sampled");

    std::vector<ModeFrequency> out;
    for (int well : wells) {
        const int idx = well - traj.first_well;
        if (idx < 0 || idx >= traj.states.front().size())
            throw Error(ErrorCode::InvalidParameter,
                        "well " + std::to_string(well) + " not in trajectory");
        std::vector<complex<double>> samples(n);
        for (int j = 0; j < n; ++j) samples[j] = traj.states[j][idx];
        const Spectrum s = windowed_spectrum(samples, dt);

        int kmax = 0;
        for (int k = 1; k < n; ++k)
            if (s.power[k] > s.power[kmax]) kmax = k;

        // local quadratic interpolation on log power (circular neighbors)
        auto at = [&](int k) { return s.power[((k % n) + n) % n]; };
        const double pm = std::log(std::max(at(kmax - 1), 1e-300));
        const double p0 = std::log(std::max(at(kmax), 1e-300));
        const double pp = std::log(std::max(at(kmax + 1), 1e-300));
        double shift = 0.0;
        const double denom = pm - 2.0 * p0 + pp;
        if (denom < 0.0) shift = 0.5 * (pm - pp) / denom;
        shift = std::clamp(shift, -0.5, 0.5);
        double kf = kmax + shift;
        if (kf > n / 2.0) kf -= n;
        ModeFrequency mf;
        mf.well = well;
        mf.omega = 2.0 * kPi * kf / (n * dt);
        mf.candidates.push_back({mf.omega, s.power[kmax]});

        // ambiguity: any separate local maximum within 3 dB of the main peak
        for (int k = 0; k < n; ++k) {
            int d = std::abs(k - kmax);
            d = std::min(d, n - d);
            if (d <= 3) continue;
            if (s.power[k] >= 0.5 * s.power[kmax] && s.power[k] >= at(k - 1) &&
                s.power[k] >= at(k + 1)) {
                mf.ambiguous = true;
                mf.candidates.push_back({s.omega[k], s.power[k]});
            }
        }
        std::sort(mf.candidates.begin(), mf.candidates.end(),
                  [](const FrequencyPeak& x, const FrequencyPeak& y) {
                      return x.power > y.power;
                  });
        out.push_back(std::move(mf));
    }
    return out;
}

double frequency_pulling_slope(const Trajectory& traj,
                               const std::vector<int>& wells,
                               const RescaledParams& rp) {
    const auto freqs = mode_frequencies(traj, wells);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(wells.size());
    for (int i = 0; i < n; ++i) {
        double mean_action = 0.0;
        const int idx = wells[i] - traj.first_well;
        for (const auto& st : traj.states) mean_action += std::norm(st[idx]);
        mean_action /= static_cast<double>(traj.states.size());
        const double offset =
            -(freqs[i].omega + wells[i] * rp.force_rescaled);
        sx += mean_action;
        sy += offset;
        sxx += mean_action * mean_action;
        sxy += mean_action * offset;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double lock_fraction(double x) { return std::abs(x - std::round(x)); }

int count_angle_clusters(std::vector<double> angles, double min_gap) {
    if (angles.empty()) return 0;
    std::sort(angles.begin(), angles.end());
    int gaps = 0;
    for (std::size_t i = 1; i < angles.size(); ++i)
        if (angles[i] - angles[i - 1] > min_gap) ++gaps;
    const double wrap_gap = angles.front() + 2.0 * kPi - angles.back();
    if (wrap_gap > min_gap) ++gaps;
    return gaps == 0 ? 1 : gaps;
}

IslandChain detect_island_chain(const SectionSpec& spec,
                                const LatticeSystem& system, int p, int q,
                                double lo, double hi, double tol, int crossings) {
    const double target = static_cast<double>(p) / q;
    SectionSpec s = spec;
    s.max_crossings = crossings;
    s.max_time = 1e9;  // crossing count terminates the orbits

    auto rot = [&](double launch) {
        PoincareSection ps = poincare_section(s, {launch}, system, crossings, 1);
        return ps.orbits[0];
    };
    const double min_gap = 2.0 * kPi / (4.0 * q);
    auto inspect = [&](double launch, const OrbitSection& orbit,
                       IslandChain& chain) {
        const double rho = orbit.rotation_number();
        if (std::abs(lock_fraction(rho) - target) >= tol) return false;
        const int clusters = count_angle_clusters(orbit.angles_wrapped, min_gap);
        if (clusters != q) return false;  // locked but smeared: not inside yet
        chain = {true, launch, rho, clusters};
        return true;
    };

    // lock_fraction - target changes sign across the chain; bisect on it and
    // stop only when the orbit also shows the q separated islands (the locked
    // plateau has finite width, so bisection eventually lands inside).
    IslandChain chain;
    OrbitSection olo = rot(lo), ohi = rot(hi);
    if (inspect(lo, olo, chain) || inspect(hi, ohi, chain)) return chain;
    double flo = lock_fraction(olo.rotation_number()) - target;
    double fhi = lock_fraction(ohi.rotation_number()) - target;
    if (flo * fhi >= 0.0) return chain;
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        OrbitSection om = rot(mid);
        if (inspect(mid, om, chain)) return chain;
        const double fm = lock_fraction(om.rotation_number()) - target;
        if (fm * flo < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return chain;
}

}  // namespace starkbec
