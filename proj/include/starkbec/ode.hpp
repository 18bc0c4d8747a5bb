#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "starkbec/common.hpp"

namespace starkbec {

using OdeRhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double h_init = 1e-3;
    double h_max = 1.0;
    long max_steps = 200'000'000;
};

struct OdeDiagnostics {
    long steps = 0;
    long rejected = 0;
    double min_step = 0.0;
};

/// Explicit embedded Runge-Kutta of order 8(5,3), the Dormand-Prince method
/// of Hairer-Norsett-Wanner (DOP853 tableau). The driver keeps its adaptive
/// step across advance_to() calls, so stopping at sample times does not reset
/// the ramp. State is a flat real vector; complex systems interleave re/im.
class Dop853 {
public:
    Dop853(OdeRhs f, Eigen::VectorXd y0, double t0, OdeOptions opt = {})
        : f_(std::move(f)), y_(std::move(y0)), t_(t0), opt_(opt), h_(opt.h_init) {
        const auto n = y_.size();
        for (auto& k : k_) k.resize(n);
        ytmp_.resize(n);
        ynew_.resize(n);
        f_(t_, y_, k_[0]);
        h_ = std::min(h_, opt_.h_max);
        diag_.min_step = h_;
    }

    double t() const { return t_; }
    const Eigen::VectorXd& y() const { return y_; }
    Eigen::VectorXd& y_mutable() { return y_; }
    const OdeDiagnostics& diagnostics() const { return diag_; }

    /// Refresh the cached derivative after an external modification of y.
    void resync() { f_(t_, y_, k_[0]); }

    void advance_to(double t_end) {
        advance_to(t_end, [](double, const Eigen::VectorXd&) {});
    }

    /// Advances to t_end exactly; observer(t, y) runs after each accepted step.
    template <typename Observer>
    void advance_to(double t_end, Observer&& observer) {
        while (t_ < t_end) {
            if (t_end - t_ < 1e-14 * std::max(1.0, std::abs(t_end))) {
                t_ = t_end;  // below resolvable gap
                break;
            }
            if (diag_.steps + diag_.rejected >= opt_.max_steps)
                throw Error(ErrorCode::Stiffness,
                            "step limit exceeded at t = " + format_full(t_));
            if (h_ < 1e-14 * std::max(1.0, std::abs(t_)))
                throw Error(ErrorCode::Stiffness,
                            "step size underflow at t = " + format_full(t_));
            const bool clamped = h_ > t_end - t_;
            const double h = clamped ? t_end - t_ : h_;
            double err = try_step(h);
            if (!std::isfinite(err)) err = 1e10;  // NaN state: force a rejection
            const double fac =
                std::clamp(0.9 * std::pow(std::max(err, 1e-12), -0.125), 0.2, 10.0);
            if (err <= 1.0) {
                t_ += h;
                y_.swap(ynew_);
                k_[0].swap(k_[12]);  // derivative at the accepted point
                ++diag_.steps;
                diag_.min_step = std::min(diag_.min_step, h);
                // A step shortened to hit t_end says nothing about the
                // controller's step, so only unclamped steps update it.
                if (!clamped) h_ = std::min(h * fac, opt_.h_max);
                observer(t_, static_cast<const Eigen::VectorXd&>(y_));
            } else {
                ++diag_.rejected;
                h_ = h * std::min(fac, 1.0);
            }
        }
    }

private:
    // One trial step; returns the combined 5th/3rd-order error norm of
    // Hairer's estimator. k_[12] = f(t+h, y_new) doubles as the next step's
    // first stage when the step is accepted.
    double try_step(double h) {
        for (int s = 1; s < 12; ++s) {
            ytmp_ = y_;
            for (int j = 0; j < s; ++j)
                if (kA[s][j] != 0.0) ytmp_ += (h * kA[s][j]) * k_[j];
            f_(t_ + kC[s] * h, ytmp_, k_[s]);
        }
        ynew_ = y_;
        for (int s = 0; s < 12; ++s)
            if (kB[s] != 0.0) ynew_ += (h * kB[s]) * k_[s];
        f_(t_ + h, ynew_, k_[12]);

        const auto n = y_.size();
        double err5n2 = 0.0, err3n2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double e5 = 0.0, e3 = 0.0;
            for (int s = 0; s < 13; ++s) {
                if (kE5[s] != 0.0) e5 += kE5[s] * k_[s][i];
                if (kE3[s] != 0.0) e3 += kE3[s] * k_[s][i];
            }
            const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y_[i]),
                                                               std::abs(ynew_[i]));
            e5 /= sc;
            e3 /= sc;
            err5n2 += e5 * e5;
            err3n2 += e3 * e3;
        }
        const double denom = err5n2 + 0.01 * err3n2;
        if (denom <= 0.0) return 0.0;
        return std::abs(h) * err5n2 / std::sqrt(denom * static_cast<double>(n));
    }

    OdeRhs f_;
    Eigen::VectorXd y_;
    double t_;
    OdeOptions opt_;
    double h_;
    OdeDiagnostics diag_;
    std::array<Eigen::VectorXd, 13> k_;
    Eigen::VectorXd ytmp_, ynew_;

    static const double kC[12];
    static const double kA[12][12];
    static const double kB[12];
    static const double kE3[13];
    static const double kE5[13];
};

/// Integrates from t0 through ascending sample_times, invoking
/// on_sample(t, y) exactly at each (steps are clamped, no interpolation).
template <typename SampleCb>
OdeDiagnostics integrate_sampled(const OdeRhs& f, Eigen::VectorXd& y, double t0,
                                 const std::vector<double>& sample_times,
                                 const OdeOptions& opt, SampleCb&& on_sample) {
    Dop853 driver(f, std::move(y), t0, opt);
    for (double ts : sample_times) {
        if (ts < driver.t() - 1e-12)
            throw Error(ErrorCode::InvalidParameter, "sample times must be ascending");
        if (ts > driver.t()) driver.advance_to(ts);
        on_sample(ts, driver.y());
    }
    y = driver.y();
    return driver.diagnostics();
}

}  // namespace starkbec
