#include <doctest.h>

#include "fixtures.hpp"
#include "starkbec/units.hpp"
#include "starkbec/ws_basis.hpp"

using namespace starkbec;

// Reference physical tuple for the fixtures: 87Rb, a_s = 5.3 nm, in an
// 850 nm lattice with transverse extent L = 20 um. With these numbers
// N = 7e4 atoms give g just above 1.
static LabParams rb87() {
    LabParams lab;
    lab.scattering_length = 5.3e-9;
    lab.transverse_length = 2.0e-5;
    lab.laser_wavelength = 8.5e-7;
    lab.lattice_depth = 5.0;
    lab.tilt_force = 0.25;
    return lab;
}

TEST_CASE("lab_to_normalized: g formula and linearity in N") {
    LabParams lab = rb87();

    lab.atom_count = 0;
    CHECK(lab_to_normalized(lab).g == 0.0);

    lab.atom_count = 10000;
    const double g1 = lab_to_normalized(lab).g;
    lab.atom_count = 20000;
    const double g2 = lab_to_normalized(lab).g;
    CHECK(g2 == doctest::Approx(2.0 * g1).epsilon(1e-14));

    // explicit formula: g = 8 a_s N / (L^2 k_L)
    const double k_l = 2.0 * kPi / lab.laser_wavelength;
    CHECK(g2 == doctest::Approx(8.0 * 5.3e-9 * 20000 / (4e-10 * k_l)).epsilon(1e-14));

    // N = 7e4 lands close to g = 1 for this tuple
    lab.atom_count = 70000;
    const double g = lab_to_normalized(lab).g;
    CHECK(g == doctest::Approx(1.0038).epsilon(1e-3));
    CHECK(g > 0.9);
    CHECK(g < 1.1);

    // v0 and force copy through
    ModelParams p = lab_to_normalized(lab);
    CHECK(p.v0 == 5.0);
    CHECK(p.force == 0.25);
}

TEST_CASE("lab_to_normalized: invalid input") {
    LabParams lab = rb87();
    lab.transverse_length = 0.0;
    CHECK_THROWS_AS(lab_to_normalized(lab), Error);
    lab = rb87();
    lab.laser_wavelength = -1e-7;
    CHECK_THROWS_AS(lab_to_normalized(lab), Error);
    lab = rb87();
    lab.atom_count = -5;
    CHECK_THROWS_AS(lab_to_normalized(lab), Error);
}

TEST_CASE("ModelParams: g ceiling and fixed mass") {
    ModelParams p = test::fig_params();
    CHECK_NOTHROW(p.validate());
    p.g = 1.5;  // above the default ceiling 1
    CHECK_THROWS_AS(p.validate(), Error);
    p.g_max = 2.0;
    CHECK_NOTHROW(p.validate());
    CHECK(ModelParams::mass == doctest::Approx(kPi * kPi / 2.0).epsilon(1e-16));
}

TEST_CASE("rescale: footnote chi values") {
    ModelParams p = test::fig_params();
    RescaledParams r =
        rescale(p, test::kChi000Ref, test::kChi001Ref, test::kChi00m1Ref);

    CHECK(r.force_rescaled == doctest::Approx(0.25 / (0.25 * 1.99)).epsilon(1e-14));
    CHECK(r.force_rescaled == doctest::Approx(0.5025).epsilon(1e-3));
    CHECK(r.epsilon == doctest::Approx(0.15 / 1.99).epsilon(1e-14));
    CHECK(r.epsilon == doctest::Approx(0.0754).epsilon(1e-2));
    CHECK(r.beta == doctest::Approx(-0.16 / 0.15).epsilon(1e-14));
    CHECK(r.beta == doctest::Approx(-1.0667).epsilon(1e-3));
    // the paper quotes beta ~ -1
    CHECK(std::abs(r.beta + 1.0) < 0.15);
    CHECK(r.sigma_g == 1.0);
    CHECK(r.time_scale == doctest::Approx(1.0 / (0.25 * 1.99)).epsilon(1e-14));
    CHECK_FALSE(r.epsilon_large);

    p.g = -0.25;
    CHECK(rescale(p, 1.99, -0.16, 0.15).sigma_g == -1.0);
}

TEST_CASE("rescale: error and edge paths") {
    ModelParams p = test::fig_params();
    p.g = 0.0;
    CHECK_THROWS_AS(rescale(p, 1.99, -0.16, 0.15), Error);
    try {
        rescale(p, 1.99, -0.16, 0.15);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RescalingUndefined);
    }

    p.g = 0.25;
    CHECK_THROWS_AS(rescale(p, -1.0, -0.16, 0.15), Error);

    // epsilon >= 0.5 is flagged, not rejected
    RescaledParams r = rescale(p, 1.0, -0.5, 0.6);
    CHECK(r.epsilon_large);
    CHECK(r.epsilon == doctest::Approx(0.6));
}

TEST_CASE("rescale: clock round trip") {
    RescaledParams r = rescale(test::fig_params(), 1.99, -0.16, 0.15);
    // one rescaled unit equals time_scale raw units, exactly invertible
    for (double tau : {0.0, 0.37, 12.0, 4001.5}) {
        const double raw = tau * r.time_scale;
        CHECK(raw / r.time_scale == doctest::Approx(tau).epsilon(1e-15));
    }
}

TEST_CASE("rescale: accepts a ChiTensor") {
    ChiTensor chi(1);
    chi.set(0, 0, 0, 1.99);
    chi.set(0, 0, 1, -0.16);
    chi.set(0, 0, -1, 0.15);
    RescaledParams r = rescale(test::fig_params(), chi);
    CHECK(r.epsilon == doctest::Approx(0.15 / 1.99));
}

TEST_CASE("g stays proportional to atom count at fixed geometry") {
    LabParams lab = rb87();
    lab.atom_count = 1000;
    const double unit = lab_to_normalized(lab).g / 1000.0;
    for (long n : {1L, 7L, 3000L, 70000L, 123456L}) {
        lab.atom_count = n;
        CHECK(lab_to_normalized(lab).g ==
              doctest::Approx(unit * static_cast<double>(n)).epsilon(1e-12));
    }
}
