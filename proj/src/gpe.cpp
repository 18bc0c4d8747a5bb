#include "starkbec/gpe.hpp"

#include <cmath>
#include <complex>

#include <fftw3.h>

namespace starkbec {

using std::complex;
using namespace std::complex_literals;

struct GpeEvolver::Impl {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    fftw_complex* buf = nullptr;
    int n = 0;
    Eigen::VectorXd potential;   // v0 cos(2 pi x) + F x
    Eigen::VectorXd k2_over_2m;  // kinetic phase rates

    ~Impl() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (buf) fftw_free(buf);
    }
};

GpeEvolver::GpeEvolver(const Grid& grid, const ModelParams& params, GpeOptions opts)
    : impl_(std::make_unique<Impl>()), grid_(grid), params_(params), opts_(opts) {
    params.validate();
    const int n = grid.size;
    impl_->n = n;
    impl_->buf = fftw_alloc_complex(n);
    // FFTW_ESTIMATE keeps planning deterministic (MEASURE picks timing-dependent
    // algorithms, which perturbs the last bits of reruns).
    impl_->fwd = fftw_plan_dft_1d(n, impl_->buf, impl_->buf, FFTW_FORWARD,
                                  FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_dft_1d(n, impl_->buf, impl_->buf, FFTW_BACKWARD,
                                  FFTW_ESTIMATE);

    impl_->potential.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = grid.x(i);
        impl_->potential[i] = params.v0 * std::cos(2.0 * kPi * x) + params.force * x;
    }
    impl_->k2_over_2m.resize(n);
    const double dk = 2.0 * kPi / grid.length();
    for (int i = 0; i < n; ++i) {
        const int j = i <= n / 2 ? i : i - n;
        const double k = dk * j;
        impl_->k2_over_2m[i] = k * k / (2.0 * ModelParams::mass);
    }
}

GpeEvolver::~GpeEvolver() = default;

void GpeEvolver::step(Eigen::VectorXcd& psi, double dt) const {
    auto* buf = reinterpret_cast<complex<double>*>(impl_->buf);
    const int n = impl_->n;
    const double inv_n = 1.0 / n;

    // half kinetic
    for (int i = 0; i < n; ++i) buf[i] = psi[i];
    fftw_execute(impl_->fwd);
    for (int i = 0; i < n; ++i)
        buf[i] *= std::exp(-0.5i * dt * impl_->k2_over_2m[i]);
    fftw_execute(impl_->bwd);

    // full potential + nonlinear (|psi| is unchanged by the phase, so the
    // nonlinear factor is exact over the substep)
    for (int i = 0; i < n; ++i) {
        const complex<double> v = buf[i] * inv_n;
        const double phase = impl_->potential[i] + params_.g * std::norm(v);
        buf[i] = v * std::exp(-1.0i * dt * phase);
    }

    // half kinetic
    fftw_execute(impl_->fwd);
    for (int i = 0; i < n; ++i)
        buf[i] *= std::exp(-0.5i * dt * impl_->k2_over_2m[i]);
    fftw_execute(impl_->bwd);
    for (int i = 0; i < n; ++i) psi[i] = buf[i] * inv_n;
}

double GpeEvolver::split_step_error(const Field& field, double dt) const {
    Eigen::VectorXcd one = field.samples;
    step(one, dt);
    Eigen::VectorXcd two = field.samples;
    step(two, 0.5 * dt);
    step(two, 0.5 * dt);
    return std::sqrt(grid_.spacing * (one - two).squaredNorm());
}

double GpeEvolver::wall_leak(const Field& field) const {
    const int margin = 2 * grid_.size / static_cast<int>(grid_.length());
    double leak = 0.0;
    for (int i = 0; i < margin; ++i)
        leak += std::norm(field.samples[i]) +
                std::norm(field.samples[grid_.size - 1 - i]);
    return leak * grid_.spacing;
}

void GpeEvolver::advance(Field& field, double dt, long steps) {
    if (!field.grid.compatible(grid_))
        throw Error(ErrorCode::IncompatibleGrid,
                    "field grid does not match the evolver grid");
    const double norm0 = field.norm2();
    for (long s = 0; s < steps; ++s) {
        step(field.samples, dt);
        field.time += dt;
        ++diag_.steps;
        if ((s + 1) % opts_.leak_check_stride == 0 || s + 1 == steps) {
            const double leak = wall_leak(field);
            diag_.max_leak = std::max(diag_.max_leak, leak);
            if (leak >= opts_.leak_error)
                throw Error(ErrorCode::BoxLeak,
                            "wall-margin population " + format_full(leak) +
                                " at t = " + format_full(field.time) +
                                "; enlarge the box");
            if (leak >= opts_.leak_warn && !diag_.leak_warning) {
                diag_.leak_warning = true;
                diag_.warnings.push_back("wall-margin population reached " +
                                         format_full(leak) + " at t = " +
                                         format_full(field.time));
            }
            const double drift = std::abs(field.norm2() - norm0);
            diag_.norm_drift = std::max(diag_.norm_drift, drift);
            if (drift > opts_.norm_tol)
                throw Error(ErrorCode::StepSize,
                            "norm drift " + format_full(drift) +
                                " exceeds tolerance; retry with dt = " +
                                format_full(0.5 * dt));
        }
    }
}

Field evolve_gpe(const Field& field, const ModelParams& params, double dt,
                 long steps, GpeOptions opts, GpeDiagnostics* diag_out) {
    if (dt <= 0.0)
        throw Error(ErrorCode::InvalidParameter, "dt must be positive");
    const double norm0 = field.norm2();
    if (std::abs(norm0 - 1.0) > 1e-6)
        throw Error(ErrorCode::InvalidParameter,
                    "field must be unit-norm (got " + format_full(norm0) + ")");

    GpeEvolver evolver(field.grid, params, opts);
    int halvings = 0;
    while (evolver.split_step_error(field, dt) > opts.split_err_tol) {
        if (++halvings > opts.max_halvings)
            throw Error(ErrorCode::StepSize,
                        "splitting error stays above tolerance after " +
                            std::to_string(opts.max_halvings) + " halvings");
        dt *= 0.5;
        steps *= 2;
    }
    if (halvings > 0)
        evolver.diagnostics().warnings.push_back(
            "time step halved " + std::to_string(halvings) +
            "x to meet the splitting tolerance (dt = " + format_full(dt) + ")");

    Field out = field;
    evolver.advance(out, dt, steps);
    evolver.diagnostics().dt_used = dt;
    if (diag_out) *diag_out = evolver.diagnostics();
    return out;
}

ModeState project_to_ws(const Field& field, const WsBasis& basis) {
    if (!field.grid.compatible(basis.grid()))
        throw Error(ErrorCode::IncompatibleGrid,
                    "field and basis use different grids");
    ModeState m;
    m.first_well = basis.min_well();
    m.time = field.time;
    const int n = basis.max_well() - basis.min_well() + 1;
    m.amplitudes.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& phi = basis.at(basis.min_well() + i).samples;
        // phi is real: c_n = h * sum phi psi
        m.amplitudes[i] =
            field.grid.spacing * (phi.cast<complex<double>>().conjugate().array() *
                                  field.samples.array())
                                     .sum();
    }
    return m;
}

double completeness(const Field& field, const WsBasis& basis) {
    return project_to_ws(field, basis).norm2();
}

double gpe_energy(const Field& field, const ModelParams& params) {
    const Grid& g = field.grid;
    const int n = g.size;
    // spectral kinetic term
    Eigen::VectorXcd hat = field.samples;
    {
        fftw_complex* buf = fftw_alloc_complex(n);
        auto* b = reinterpret_cast<complex<double>*>(buf);
        for (int i = 0; i < n; ++i) b[i] = field.samples[i];
        fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_execute(plan);
        for (int i = 0; i < n; ++i) hat[i] = b[i];
        fftw_destroy_plan(plan);
        fftw_free(buf);
    }
    const double dk = 2.0 * kPi / g.length();
    double kinetic = 0.0;
    for (int i = 0; i < n; ++i) {
        const int j = i <= n / 2 ? i : i - n;
        const double k = dk * j;
        kinetic += k * k / (2.0 * ModelParams::mass) * std::norm(hat[i]);
    }
    kinetic *= g.spacing / n;  // Parseval normalization for the grid quadrature

    double rest = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = g.x(i);
        const double dens = std::norm(field.samples[i]);
        rest += (params.v0 * std::cos(2.0 * kPi * x) + params.force * x) * dens +
                0.5 * params.g * dens * dens;
    }
    rest *= g.spacing;
    return kinetic + rest;
}

Field field_from_modes(const ModeState& modes, const WsBasis& basis) {
    Field f;
    f.grid = basis.grid();
    f.time = modes.time;
    f.samples = Eigen::VectorXcd::Zero(f.grid.size);
    for (int i = 0; i < modes.size(); ++i) {
        const int well = modes.well(i);
        if (modes.amplitudes[i] == 0.0) continue;
        f.samples += modes.amplitudes[i] *
                     basis.at(well).samples.cast<complex<double>>();
    }
    const double norm = std::sqrt(f.norm2());
    if (norm == 0.0)
        throw Error(ErrorCode::InvalidParameter, "empty preparation");
    f.samples /= norm;
    return f;
}

}  // namespace starkbec
