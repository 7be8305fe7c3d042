#ifndef CANARDLAB_ODE_HPP
#define CANARDLAB_ODE_HPP

// Stiff integration for planar autonomous fields: the Kaps-Rentrop GRK4T
// Rosenbrock method (linearly implicit, order 4 with an embedded order-3
// error estimate, analytic Jacobian).  Step control is error-per-unit-step,
// so the accumulated error over a run tracks the requested tolerance times
// the time span.  Dense output is cubic Hermite and drives event location.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "rootfind.hpp"

namespace canardlab {

struct OdeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0, y = 0;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Mat2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;
    double det() const { return a11 * a22 - a12 * a21; }
    Vec2 solve(const Vec2& r) const {
        double d = det();
        return {(r.x * a22 - r.y * a12) / d, (r.y * a11 - r.x * a21) / d};
    }
};

using Field2 = std::function<Vec2(const Vec2&)>;
using Jacobian2 = std::function<Mat2(const Vec2&)>;

struct OdeStats {
    long steps = 0;
    long rejected = 0;
};

struct OdeOptions {
    double tol = 1e-8;   // error per unit time, also the relative weight
    double h_init = 0;   // 0: pick automatically
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 20'000'000;
    double fixed_step = 0;  // >0: disable adaptivity (order tests)
};

// Scalar event g(y); integration stops at the first sign change in the
// requested direction (+1 rising, -1 falling, 0 either) after t0 + t_min.
struct EventSpec {
    std::function<double(const Vec2&)> value;
    int direction = 0;
    double t_min = 0;
};

struct OdeResult {
    double t = 0;
    Vec2 y{};
    bool event_hit = false;
    double t_event = 0;
    Vec2 y_event{};
    OdeStats stats;
};

namespace ode_detail {

inline Vec2 hermite(double s, const Vec2& y0, const Vec2& f0, const Vec2& y1,
                    const Vec2& f1, double h) {
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return y0 * h00 + f0 * (h10 * h) + y1 * h01 + f1 * (h11 * h);
}

// GRK4T coefficients (Kaps & Rentrop).
inline constexpr double GAM = 0.231;
inline constexpr double A21 = 2.0;
inline constexpr double A31 = 4.52470820736;
inline constexpr double A32 = 4.16352878860;
inline constexpr double C21 = -5.07167533877;
inline constexpr double C31 = 6.02015272865;
inline constexpr double C32 = 0.159750684673;
inline constexpr double C41 = -1.856343618677;
inline constexpr double C42 = -8.50538085819;
inline constexpr double C43 = -2.08407513602;
inline constexpr double B1 = 3.95750374663;
inline constexpr double B2 = 4.62489238836;
inline constexpr double B3 = 0.617477263873;
inline constexpr double B4 = 1.28261294568;
inline constexpr double E1 = -2.30215540292;
inline constexpr double E2 = -3.07363448539;
inline constexpr double E3 = 0.873280801802;
inline constexpr double E4 = 1.28261294568;

}  // namespace ode_detail

// Integrates y' = F(y) from (t0, y0) to t_end (either direction).  on_step is
// called after every accepted step as on_step(t, y, f), including the initial
// point and the event point when one fires.
template <class StepCb>
OdeResult integrate_ode(const Field2& F, const Jacobian2& J, Vec2 y0, double t0,
                        double t_end, const OdeOptions& opt, const EventSpec* event,
                        StepCb&& on_step) {
    using namespace ode_detail;

    OdeResult out;
    double dir = (t_end >= t0) ? 1.0 : -1.0;
    double span = std::abs(t_end - t0);
    if (span == 0.0) {
        out.t = t0;
        out.y = y0;
        on_step(t0, y0, F(y0));
        return out;
    }

    double t = t0;
    Vec2 y = y0;
    Vec2 f0 = F(y);
    on_step(t, y, f0);

    double ev_prev = event ? event->value(y) : 0.0;

    double h;
    if (opt.fixed_step > 0) {
        h = dir * opt.fixed_step;
    } else if (opt.h_init > 0) {
        h = dir * std::min(opt.h_init, opt.h_max);
    } else {
        double d1 = f0.norm();
        h = dir * std::min({1e-3 * span, (d1 > 0 ? 1e-2 / d1 : 1e-4), opt.h_max});
        if (h == 0.0) h = dir * 1e-8;
    }

    const double hmin = std::max(span, std::abs(t0)) * 1e-14;

    while (out.stats.steps < opt.max_steps) {
        bool last = dir * (t + h - t_end) >= 0;
        if (last) h = t_end - t;
        if (std::abs(h) < hmin)
            throw OdeError("step-size underflow at t=" + std::to_string(t));

        Mat2 jac = J(y);
        double ig = 1.0 / (GAM * h);
        Mat2 W{ig - jac.a11, -jac.a12, -jac.a21, ig - jac.a22};
        double detW = W.det();
        if (detW == 0.0 || !std::isfinite(detW)) {
            h *= 0.5;
            ++out.stats.rejected;
            continue;
        }

        Vec2 g1 = W.solve(f0);
        Vec2 f1 = F(y + g1 * A21);
        Vec2 g2 = W.solve(f1 + g1 * (C21 / h));
        Vec2 f2 = F(y + g1 * A31 + g2 * A32);
        Vec2 g3 = W.solve(f2 + (g1 * C31 + g2 * C32) * (1.0 / h));
        Vec2 g4 = W.solve(f2 + (g1 * C41 + g2 * C42 + g3 * C43) * (1.0 / h));
        Vec2 y1 = y + g1 * B1 + g2 * B2 + g3 * B3 + g4 * B4;
        if (!std::isfinite(y1.x) || !std::isfinite(y1.y)) {
            h *= 0.5;
            ++out.stats.rejected;
            continue;
        }
        Vec2 fe = F(y1);

        double hnew = h;
        if (opt.fixed_step <= 0) {
            Vec2 err = g1 * E1 + g2 * E2 + g3 * E3 + g4 * E4;
            double wx = opt.tol * (1.0 + std::max(std::abs(y.x), std::abs(y1.x)));
            double wy = opt.tol * (1.0 + std::max(std::abs(y.y), std::abs(y1.y)));
            double enorm = std::sqrt(0.5 * ((err.x / wx) * (err.x / wx) +
                                            (err.y / wy) * (err.y / wy)));
            if (!std::isfinite(enorm)) enorm = 1e10;
            // error-per-unit-step: accept when enorm <= |h|
            double ratio = enorm / std::abs(h);
            double fac = 0.9 * std::pow(std::max(ratio, 1e-12), -0.25);
            hnew = h * std::min(5.0, std::max(0.2, fac));
            if (std::abs(hnew) > opt.h_max) hnew = dir * opt.h_max;
            if (ratio > 1.0) {
                ++out.stats.rejected;
                h = hnew;
                continue;
            }
        }

        // look for an event inside the accepted step before committing
        if (event) {
            double ev_new = event->value(y1);
            bool armed = dir * (t + h - (t0 + dir * event->t_min)) > 0;
            if (armed && ev_prev * ev_new < 0) {
                bool rising = ev_new > ev_prev;
                if (event->direction == 0 || (event->direction > 0) == rising) {
                    auto evat = [&](double s) {
                        return event->value(hermite(s, y, f0, y1, fe, h));
                    };
                    double s = brent(evat, 0.0, 1.0, 1e-14);
                    out.event_hit = true;
                    out.t_event = t + s * h;
                    out.y_event = hermite(s, y, f0, y1, fe, h);
                    out.t = out.t_event;
                    out.y = out.y_event;
                    ++out.stats.steps;
                    on_step(out.t_event, out.y_event, F(out.y_event));
                    return out;
                }
            }
            ev_prev = ev_new;
        }

        t = last ? t_end : t + h;
        y = y1;
        f0 = fe;
        h = hnew;
        ++out.stats.steps;
        on_step(t, y, f0);

        if (last || dir * (t - t_end) >= 0) {
            out.t = t;
            out.y = y;
            return out;
        }
    }
    throw OdeError("integration exceeded max_steps");
}

inline OdeResult integrate_ode(const Field2& F, const Jacobian2& J, Vec2 y0,
                               double t0, double t_end, const OdeOptions& opt,
                               const EventSpec* event = nullptr) {
    return integrate_ode(F, J, y0, t0, t_end, opt, event,
                         [](double, const Vec2&, const Vec2&) {});
}

}  // namespace canardlab

#endif
