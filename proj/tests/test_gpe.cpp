#include <doctest.h>

#include <complex>

#include "fixtures.hpp"
#include "starkbec/gpe.hpp"

using namespace starkbec;
using namespace std::complex_literals;
using test::fig_basis;
using test::fig_params;

namespace {

Field single_mode_field(int well) {
    ModeState m;
    m.first_well = well;
    m.amplitudes = Eigen::VectorXcd::Ones(1);
    return field_from_modes(m, fig_basis());
}

}  // namespace

TEST_CASE("projection: exact basis states and superpositions") {
    const WsBasis& basis = fig_basis();

    Field f = single_mode_field(3);
    ModeState m = project_to_ws(f, basis);
    CHECK(std::abs(m.at_well(3) - 1.0) < 1e-8);
    for (int n = basis.min_well(); n <= basis.max_well(); ++n)
        if (n != 3) CHECK(std::abs(m.at_well(n)) < 1e-8);

    // (phi_0 + i phi_1)/sqrt(2)
    ModeState prep;
    prep.first_well = 0;
    prep.amplitudes.resize(2);
    prep.amplitudes << 1.0, 1.0i;
    Field g = field_from_modes(prep, basis);
    ModeState p = project_to_ws(g, basis);
    CHECK(std::norm(p.at_well(0)) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::norm(p.at_well(1)) == doctest::Approx(0.5).epsilon(1e-9));
    const double dtheta = std::arg(p.at_well(1) * std::conj(p.at_well(0)));
    CHECK(dtheta == doctest::Approx(kPi / 2.0).epsilon(1e-9));
}

TEST_CASE("projection: twelve-well preparation is complete at t = 0") {
    ModeState prep;
    prep.first_well = -6;
    prep.amplitudes =
        Eigen::VectorXcd::Constant(12, 1.0 / std::sqrt(12.0));
    Field f = field_from_modes(prep, fig_basis());
    CHECK(std::abs(project_to_ws(f, fig_basis()).norm2() - 1.0) < 1e-6);
    CHECK(std::abs(completeness(f, fig_basis()) - 1.0) < 1e-6);
}

TEST_CASE("projection: grid mismatch is rejected") {
    Field f = single_mode_field(0);
    f.grid.spacing *= 2.0;
    CHECK_THROWS_AS(project_to_ws(f, fig_basis()), Error);
    try {
        project_to_ws(f, fig_basis());
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IncompatibleGrid);
    }
}

TEST_CASE("split-step error scales as dt^3 and the default dt passes") {
    Field f = single_mode_field(0);
    GpeEvolver ev(f.grid, fig_params());
    const double e1 = ev.split_step_error(f, 1e-3);
    const double e2 = ev.split_step_error(f, 2e-3);
    CHECK(e1 < GpeOptions{}.split_err_tol);
    CHECK(e2 / e1 > 6.0);
    CHECK(e2 / e1 < 10.0);
}

TEST_CASE("evolve_gpe: linear eigenstate stays put over t = 50") {
    ModelParams p0 = fig_params();
    p0.g = 0.0;
    Field f = single_mode_field(0);
    GpeDiagnostics diag;
    Field g = evolve_gpe(f, p0, 2e-3, 25000, {}, &diag);
    CHECK(diag.norm_drift < 1e-8);
    ModeState m = project_to_ws(g, fig_basis());
    CHECK(std::norm(m.at_well(0)) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(g.time == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("evolve_gpe: halves dt until the splitting test passes") {
    Field f = single_mode_field(0);
    GpeOptions opts;
    opts.split_err_tol = 1e-9;  // 1e-3 fails this, 2.5e-4 passes
    GpeDiagnostics diag;
    Field g = evolve_gpe(f, fig_params(), 1e-3, 10, opts, &diag);
    CHECK(diag.dt_used < 1e-3);
    CHECK(!diag.warnings.empty());
    CHECK(g.time == doctest::Approx(10 * 1e-3).epsilon(1e-12));

    opts.split_err_tol = 1e-16;  // unattainable
    opts.max_halvings = 3;
    CHECK_THROWS_AS(evolve_gpe(f, fig_params(), 1e-3, 10, opts, nullptr), Error);
}

TEST_CASE("evolve_gpe: rejects non-normalized fields") {
    Field f = single_mode_field(0);
    f.samples *= 2.0;
    CHECK_THROWS_AS(evolve_gpe(f, fig_params(), 1e-3, 10), Error);
}

TEST_CASE("energy functional: conserved with second-order dt scaling") {
    ModeState prep;
    prep.first_well = -2;
    prep.amplitudes = Eigen::VectorXcd::Constant(4, 0.5);
    Field f0 = field_from_modes(prep, fig_basis());
    const double e0 = gpe_energy(f0, fig_params());

    const double drift1 =
        std::abs(gpe_energy(evolve_gpe(f0, fig_params(), 1e-3, 2000),
                            fig_params()) -
                 e0);
    const double drift2 =
        std::abs(gpe_energy(evolve_gpe(f0, fig_params(), 2e-3, 1000),
                            fig_params()) -
                 e0);
    CHECK(drift1 < 1e-6);
    CHECK(drift2 / drift1 > 2.5);  // ~4x for a second-order splitting
    CHECK(drift2 / drift1 < 8.0);
}

TEST_CASE("time reversal: forward, conjugate, forward returns the start") {
    ModeState prep;
    prep.first_well = -2;
    prep.amplitudes = Eigen::VectorXcd::Constant(4, 0.5);
    Field f0 = field_from_modes(prep, fig_basis());
    Field fw = evolve_gpe(f0, fig_params(), 1e-3, 5000);
    fw.samples = fw.samples.conjugate();
    Field bk = evolve_gpe(fw, fig_params(), 1e-3, 5000);
    bk.samples = bk.samples.conjugate();
    const double err =
        std::sqrt(f0.grid.spacing * (bk.samples - f0.samples).squaredNorm());
    CHECK(err < 1e-6);
}

TEST_CASE("leak monitor: flat field trips the wall guard") {
    const WsBasis& basis = fig_basis();
    Field f;
    f.grid = basis.grid();
    f.samples = Eigen::VectorXcd::Constant(f.grid.size,
                                           1.0 / std::sqrt(f.grid.length()));
    GpeOptions opts;
    opts.leak_check_stride = 1;
    GpeEvolver ev(f.grid, fig_params(), opts);
    CHECK_THROWS_AS(ev.advance(f, 1e-3, 1), Error);
    try {
        Field g;
        g.grid = basis.grid();
        g.samples = f.samples;
        GpeEvolver ev2(g.grid, fig_params(), opts);
        ev2.advance(g, 1e-3, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BoxLeak);
    }
}

TEST_CASE("wall leak stays tiny for localized preparations") {
    ModeState prep;
    prep.first_well = -6;
    prep.amplitudes = Eigen::VectorXcd::Constant(12, 1.0 / std::sqrt(12.0));
    Field f = field_from_modes(prep, fig_basis());
    GpeDiagnostics diag;
    evolve_gpe(f, fig_params(), 2e-3, 2500, {}, &diag);  // t = 5
    CHECK(diag.max_leak < 1e-4);
    CHECK_FALSE(diag.leak_warning);
}
