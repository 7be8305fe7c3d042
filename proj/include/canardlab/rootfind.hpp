#ifndef CANARDLAB_ROOTFIND_HPP
#define CANARDLAB_ROOTFIND_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace canardlab {

struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Brent's method on a bracketing interval.  f(a) and f(b) must have opposite
// signs (a zero endpoint is returned as-is).
template <class F>
double brent(F&& f, double a, double b, double xtol = 1e-15, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0))
        throw SolveError("brent: endpoints do not bracket a root");
    double c = a, fc = fa, d = b - a, e = b - a;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) { c = a; fc = fa; d = e = b - a; }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * xtol;
        double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d; d = p / q;
            } else {
                d = xm; e = d;
            }
        } else {
            d = xm; e = d;
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
    }
    return b;
}

// Newton iteration safeguarded by a bracket: falls back to bisection whenever
// the Newton step leaves [lo,hi] or fails to shrink the residual.
template <class F, class DF>
double newton_bracketed(F&& f, DF&& df, double lo, double hi, double x0,
                        double ftol, int max_iter = 100) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw SolveError("newton_bracketed: endpoints do not bracket a root");
    double x = x0, fx = f(x);
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fx) <= ftol) return x;
        if ((fx > 0) == (flo > 0)) { lo = x; flo = fx; } else { hi = x; fhi = fx; }
        double d = df(x);
        double xn = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (xn == x) return x;
        x = xn;
        fx = f(x);
    }
    if (std::abs(fx) <= ftol * 1e3) return x;
    throw SolveError("newton_bracketed: no convergence");
}

// Unbracketed Newton for polish steps with a good seed.
template <class F, class DF>
double newton(F&& f, DF&& df, double x0, double ftol, int max_iter = 60) {
    double x = x0;
    for (int it = 0; it < max_iter; ++it) {
        double fx = f(x);
        if (std::abs(fx) <= ftol) return x;
        double d = df(x);
        if (d == 0.0) throw SolveError("newton: zero derivative");
        double xn = x - fx / d;
        if (xn == x) return x;
        x = xn;
    }
    if (std::abs(f(x)) <= ftol * 1e3) return x;
    throw SolveError("newton: no convergence");
}

// Damped Newton in two variables.  F and J are callables on (u,v); J returns
// the row-major 2x2 Jacobian.  Converges on the residual max-norm.
struct Newton2dResult {
    double u = 0, v = 0;
    double r1 = 0, r2 = 0;
    bool converged = false;
    int iterations = 0;
};

template <class F, class J>
Newton2dResult newton2d(F&& residual, J&& jacobian, double u0, double v0,
                        double rtol, int max_iter = 50) {
    Newton2dResult out;
    double u = u0, v = v0;
    auto [r1, r2] = residual(u, v);
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it;
        if (std::max(std::abs(r1), std::abs(r2)) <= rtol) {
            out.u = u; out.v = v; out.r1 = r1; out.r2 = r2;
            out.converged = true;
            return out;
        }
        auto m = jacobian(u, v);
        double det = m[0] * m[3] - m[1] * m[2];
        if (det == 0.0 || !std::isfinite(det)) break;
        double du = (-r1 * m[3] + r2 * m[1]) / det;
        double dv = (-r2 * m[0] + r1 * m[2]) / det;
        double step = 1.0;
        double base = std::max(std::abs(r1), std::abs(r2));
        bool advanced = false;
        for (int half = 0; half < 8 && !advanced; ++half) {
            auto [t1, t2] = residual(u + step * du, v + step * dv);
            if (std::isfinite(t1) && std::isfinite(t2) &&
                std::max(std::abs(t1), std::abs(t2)) < base) {
                u += step * du; v += step * dv;
                r1 = t1; r2 = t2;
                advanced = true;
            }
            step *= 0.5;
        }
        if (!advanced) break;
    }
    out.u = u; out.v = v; out.r1 = r1; out.r2 = r2;
    out.converged = std::max(std::abs(r1), std::abs(r2)) <= rtol;
    return out;
}

}  // namespace canardlab

#endif
