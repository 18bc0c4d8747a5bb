#include <doctest.h>

#include <cmath>
#include <complex>

#include "fixtures.hpp"
#include "starkbec/analysis.hpp"

using namespace starkbec;
using namespace std::complex_literals;

namespace {

LatticeSystem three_mode() { return test::fig_system(-1, 1); }

LatticeSystem eps_zero_rescaled() {
    LatticeSystem rs = three_mode().rescaled();
    rs.chi001 = 0.0;
    rs.chi00m1 = 0.0;
    return rs;
}

}  // namespace

TEST_CASE("make_launch: normalization and validity") {
    SectionSpec spec;
    ActionAngleState aa = make_launch(spec, 0.5, -1, 1);
    CHECK(aa.actions.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(aa.actions[0] == 0.1);
    CHECK(aa.actions[1] == 0.5);
    CHECK(aa.actions[2] == doctest::Approx(0.4));
    CHECK(aa.angles.cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(make_launch(spec, 0.95, -1, 1), Error);  // partner < 0
    CHECK_THROWS_AS(make_launch(spec, 0.0, -1, 1), Error);
    try {
        make_launch(spec, 0.95, -1, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidLaunch);
    }
}

TEST_CASE("section: integrable limit gives horizontal invariant lines") {
    SectionSpec spec;
    spec.max_time = 2000.0;
    PoincareSection sec =
        poincare_section(spec, {0.2, 0.45, 0.7}, eps_zero_rescaled(), 60, 1);
    REQUIRE(sec.orbits.size() == 3);
    for (const auto& orbit : sec.orbits) {
        CHECK_FALSE(orbit.empty);
        CHECK_FALSE(orbit.terminated_early);
        CHECK(orbit.crossings() >= 50);
        CHECK(orbit.action_spread() < 1e-8);
        CHECK(orbit.max_trigger_residual < 1e-6);
        // rotation number matches the closed-form frequency ratio
        const double i0 = orbit.launch_action;
        const RescaledParams rp = three_mode().rescaled_params();
        const double w0 = -rp.sigma_g * i0;
        const double w1 = -rp.force_rescaled - rp.sigma_g * (0.9 - i0);
        const double wm1 = rp.force_rescaled - rp.sigma_g * 0.1;
        const double expected = (w1 - w0) / (wm1 - w0);
        CHECK(orbit.rotation_number() ==
              doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("section: crossings satisfy the trigger condition") {
    SectionSpec spec;
    spec.max_time = 1500.0;
    PoincareSection sec =
        poincare_section(spec, {0.3, 0.6}, three_mode(), 50, 1);
    for (const auto& orbit : sec.orbits) {
        CHECK(orbit.crossings() > 10);
        CHECK(orbit.max_trigger_residual < 1e-6);
    }
}

TEST_CASE("section: rotation number varies continuously at low action") {
    SectionSpec spec;
    spec.max_time = 3000.0;
    std::vector<double> launches{0.10, 0.14, 0.18, 0.22, 0.26};
    PoincareSection sec = poincare_section(spec, launches, three_mode(), 120, 1);
    std::vector<double> rot;
    for (const auto& orbit : sec.orbits) rot.push_back(orbit.rotation_number());
    for (std::size_t i = 1; i < rot.size(); ++i) {
        CHECK(rot[i] > rot[i - 1]);              // monotone over this range
        CHECK(std::abs(rot[i] - rot[i - 1]) < 0.4);  // no jumps
    }
}

TEST_CASE("section: invalid launches are rejected up front") {
    SectionSpec spec;
    CHECK_THROWS_AS(poincare_section(spec, {0.5, 0.95}, three_mode(), 10, 1),
                    Error);
}

TEST_CASE("lyapunov: integrable orbits read as regular") {
    ActionAngleState aa = make_launch(SectionSpec{}, 0.45, -1, 1);
    LyapunovResult res =
        lyapunov_max(from_action_angle(aa), eps_zero_rescaled(), 20000.0);
    CHECK(std::abs(res.lambda) < 1e-3);
    CHECK(res.converged);
    CHECK(res.trace.size() == 20000);
}

TEST_CASE("lyapunov: chaotic-layer orbit reads positive") {
    ActionAngleState aa = make_launch(SectionSpec{}, 0.50, -1, 1);
    LyapunovResult res =
        lyapunov_max(from_action_angle(aa), three_mode(), 20000.0);
    CHECK(res.lambda > 1e-2);
    CHECK(res.converged);
}

TEST_CASE("lyapunov: horizon precondition") {
    ActionAngleState aa = make_launch(SectionSpec{}, 0.45, -1, 1);
    CHECK_THROWS_AS(
        lyapunov_max(from_action_angle(aa), three_mode(), 50.0), Error);
}

TEST_CASE("resonance_locus: closed forms") {
    const RescaledParams rp = three_mode().rescaled_params();

    ResonanceLocus loc = resonance_locus(1, 1, rp, 0.9);
    CHECK(loc.exists);
    // F_rescaled = sigma (I0 - I1) at the 1:1 locus
    CHECK(rp.sigma_g * (loc.action - loc.partner) ==
          doctest::Approx(rp.force_rescaled).epsilon(1e-12));
    CHECK(loc.action == doctest::Approx(0.701).epsilon(2e-3));

    // with the two-decimal reference couplings: I0 = (0.9 + 0.5025)/2
    RescaledParams ref = rescale(test::fig_params(), test::kChi000Ref,
                                 test::kChi001Ref, test::kChi00m1Ref);
    CHECK(resonance_locus(1, 1, ref, 0.9).action ==
          doctest::Approx((0.9 + 0.25 / (0.25 * 1.99)) / 2.0).epsilon(1e-12));

    // equal populations resonate only at zero tilt
    RescaledParams flat = rp;
    flat.force_rescaled = 0.0;
    ResonanceLocus sym = resonance_locus(1, 1, flat, 0.9);
    CHECK(sym.action == doctest::Approx(sym.partner).epsilon(1e-12));

    // physical-units round trip: F = g chi000 (I0 - I1) at the 1:1 locus
    const double f_raw = test::fig_params().g * test::fig_chi().chi000() *
                         (loc.action - loc.partner);
    CHECK(f_raw == doctest::Approx(test::fig_params().force).epsilon(1e-12));

    // outside the physical simplex
    CHECK_FALSE(resonance_locus(9, 1, rp, 0.9).exists);

    CHECK_THROWS_AS(resonance_locus(2, 2, rp, 0.9), Error);
    CHECK_THROWS_AS(resonance_locus(0, 1, rp, 0.9), Error);
}

TEST_CASE("mode_frequencies: integrable phases land on the predicted lines") {
    LatticeSystem rs0 = eps_zero_rescaled();
    const RescaledParams rp = three_mode().rescaled_params();
    ActionAngleState aa = make_launch(SectionSpec{}, 0.55, -1, 1);
    const double T = 400.0;
    const int N = 4096;
    std::vector<double> ts(N);
    for (int i = 0; i < N; ++i) ts[i] = T * i / static_cast<double>(N);
    Trajectory tr = integrate(from_action_angle(aa), rs0, ts, 1e-10);

    auto freqs = mode_frequencies(tr, {-1, 0, 1});
    const double resolution = 2.0 * kPi / T;
    for (const auto& mf : freqs) {
        const int n = mf.well;
        const double expected =
            -n * rp.force_rescaled -
            rp.sigma_g * aa.actions[n - aa.first_well];
        CHECK(std::abs(mf.omega - expected) < resolution);
        CHECK_FALSE(mf.ambiguous);
    }
}

TEST_CASE("mode_frequencies: linear limit recovers the Bloch ladder") {
    LatticeSystem lin = three_mode();
    lin.params.g = 0.0;  // raw clock, no nonlinearity
    ActionAngleState aa = make_launch(SectionSpec{}, 0.55, -1, 1);
    const double T = 400.0;
    const int N = 4096;
    std::vector<double> ts(N);
    for (int i = 0; i < N; ++i) ts[i] = T * i / static_cast<double>(N);
    Trajectory tr = integrate(from_action_angle(aa), lin, ts, 1e-10);
    auto freqs = mode_frequencies(tr, {-1, 0, 1});
    for (const auto& mf : freqs)
        CHECK(std::abs(-mf.omega - mf.well * lin.params.force) <
              2.0 * kPi / T);
}

TEST_CASE("mode_frequencies: input validation and ambiguity") {
    Trajectory tr;
    tr.first_well = 0;
    const int N = 4096;
    const double dt = 0.1;
    for (int j = 0; j < N; ++j) {
        tr.times.push_back(dt * j);
        Eigen::VectorXcd c(1);
        // two tones within 3 dB
        c[0] = std::exp(1.0i * 0.9 * (dt * j)) +
               0.9 * std::exp(-1.0i * 1.7 * (dt * j));
        tr.states.push_back(c);
    }
    auto freqs = mode_frequencies(tr, {0});
    CHECK(freqs[0].ambiguous);
    CHECK(freqs[0].candidates.size() >= 2);
    CHECK(std::abs(freqs[0].omega - 0.9) < 0.05);

    Trajectory shorttr = tr;
    shorttr.times.resize(100);
    shorttr.states.resize(100);
    CHECK_THROWS_AS(mode_frequencies(shorttr, {0}), Error);

    Trajectory skew = tr;
    skew.times[7] += 0.05;
    CHECK_THROWS_AS(mode_frequencies(skew, {0}), Error);
}

TEST_CASE("frequency pulling: fitted slope matches sigma_g at small eps") {
    LatticeSystem rs = three_mode().rescaled();
    const double scale = 0.02 / rs.chi00m1;  // shrink eps to 0.02, keep beta
    rs.chi001 *= scale;
    rs.chi00m1 *= scale;
    const RescaledParams rp = three_mode().rescaled_params();

    ActionAngleState aa;
    aa.first_well = -1;
    aa.actions = Eigen::VectorXd(3);
    aa.angles = Eigen::VectorXd::Zero(3);
    aa.actions << 0.15, 0.55, 0.30;

    const double T = 1638.4;
    const int N = 4096;
    std::vector<double> ts(N);
    for (int i = 0; i < N; ++i) ts[i] = T * i / static_cast<double>(N);
    Trajectory tr = integrate(from_action_angle(aa), rs, ts, 1e-10);

    const double slope = frequency_pulling_slope(tr, {-1, 0, 1}, rp);
    CHECK(std::abs(slope - rp.sigma_g) < 0.05 * std::abs(rp.sigma_g));
}

TEST_CASE("cluster counting and lock fractions") {
    CHECK(lock_fraction(-1.0 / 3.0) == doctest::Approx(1.0 / 3.0));
    CHECK(lock_fraction(-2.0 / 3.0) == doctest::Approx(1.0 / 3.0));
    CHECK(lock_fraction(-4.0 / 5.0) == doctest::Approx(1.0 / 5.0));
    CHECK(lock_fraction(2.2) == doctest::Approx(0.2));

    std::vector<double> angles;
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 40; ++j)
            angles.push_back(wrap_angle(-2.0 + 2.0 * kPi * c / 3.0 + 0.02 * j));
    CHECK(count_angle_clusters(angles, 2.0 * kPi / 12.0) == 3);

    std::vector<double> one;
    for (int j = 0; j < 50; ++j) one.push_back(0.01 * j);
    CHECK(count_angle_clusters(one, 0.5) == 1);
}
