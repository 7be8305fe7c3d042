#ifndef CANARDLAB_NORMALFORM_HPP
#define CANARDLAB_NORMALFORM_HPP

// Canard-point normal form: translation onto the contact manifold, diagonal
// rescaling, and the coefficients a_1..a_{5+m} of the rescaled field.  Two
// extraction paths are provided: exact symbolic Taylor data (the default) and
// a quadrature/finite-difference evaluation of the integral definitions of
// the phi-hat remainders (the oracle).

#include <cmath>
#include <span>
#include <vector>

#include "ode.hpp"
#include "quadrature.hpp"
#include "rootfind.hpp"
#include "sysmodel.hpp"

namespace canardlab {

struct NormalFormData {
    CanardPointData cp;
    int zeta = +1;        // sign in the rescaled slow equation; the eps scale
                          // factor -zeta/(f_y g_x) must be positive
    int orientation = +1; // fold orientation, +1 at the phi-minimum point
    double scale_x = 0;   // 2/f_xx
    double scale_y = 0;   // -2/(f_xx f_y)
    double scale_lambda = 0;  // -2 zeta g_x/(f_xx G)
    double scale_eps = 0;     // -zeta/(f_y g_x)
    double c0 = 0;            // eps-constant term in the fast equation
    std::vector<double> a;    // a1..a5, then a_{5+k} per slow parameter
};

// ---------------------------------------------------------------------------
// Exact solves on the contact manifold (used by the oracle and by pull-backs)

// Contact point (x-tilde, y-tilde)(mu): solves f = f_x = 0 at the given
// parameters by damped 2D Newton seeded from the first-order expansion.
inline ContactPoint solve_contact_exact(const SlowFastSystem& sys,
                                        const CanardPointData& base, double lambda,
                                        std::span<const double> eta) {
    double dx = base.dx_dlambda * (lambda - sys.lambda0);
    double dy = base.dy_dlambda * (lambda - sys.lambda0);
    for (std::size_t k = 0; k < sys.m(); ++k) {
        dx += base.dx_deta[k] * (eta[k] - sys.eta0[k]);
        dy += base.dy_deta[k] * (eta[k] - sys.eta0[k]);
    }
    auto R = [&](double x, double y) {
        Bindings b = sys.at_mu(x, y, lambda, eta, 0.0);
        return std::pair<double, double>{sys.f.evaluate(b), sys.df({"x"}, b)};
    };
    auto J = [&](double x, double y) {
        Bindings b = sys.at_mu(x, y, lambda, eta, 0.0);
        return std::array<double, 4>{sys.df({"x"}, b), sys.df({"y"}, b),
                                     sys.df({"x", "x"}, b), sys.df({"x", "y"}, b)};
    };
    auto r = newton2d(R, J, base.alpha + dx, base.omega + dy, 1e-13);
    if (!r.converged)
        throw SolveError("solve_contact_exact: Newton failed at lambda=" +
                         std::to_string(lambda));
    return {r.u, r.v};
}

// lambda-tilde(eps): the breaking-parameter shift that keeps g zero at the
// moved contact point, solved exactly.
inline double solve_lambda_tilde_exact(const SlowFastSystem& sys,
                                       const CanardPointData& base, double eps) {
    if (eps == 0.0) return 0.0;
    auto psi = [&](double l) {
        std::vector<double> eta = sys.eta0;
        ContactPoint p = solve_contact_exact(sys, base, sys.lambda0 + l, eta);
        Bindings b = sys.at_mu(p.x, p.y, sys.lambda0 + l, eta, eps);
        return sys.g.evaluate(b);
    };
    double seed = base.lambda_tilde_slope * eps;
    double halfwidth = std::max(1e-6, 10.0 * std::abs(seed));
    // secant from the linear prediction
    double l0 = seed - halfwidth * 1e-3, l1 = seed + halfwidth * 1e-3;
    double p0 = psi(l0), p1 = psi(l1);
    for (int it = 0; it < 80; ++it) {
        if (std::abs(p1) < 1e-15) return l1;
        double denom = p1 - p0;
        if (denom == 0.0) break;
        double l2 = l1 - p1 * (l1 - l0) / denom;
        l0 = l1; p0 = p1;
        l1 = l2; p1 = psi(l1);
    }
    if (std::abs(p1) < 1e-10) return l1;
    throw SolveError("solve_lambda_tilde_exact: no convergence");
}

// ---------------------------------------------------------------------------
// Primary path: closed-form a-coefficients

inline NormalFormData normal_form(const SlowFastSystem& sys, const CanardPointData& cp) {
    if (cp.kind != ContactKind::Canard)
        throw HypothesisError("normal_form requires a classified canard point");
    NormalFormData nf;
    nf.cp = cp;
    nf.orientation = cp.orientation;
    double fy_gx = cp.f_y * cp.g_x;
    nf.zeta = fy_gx < 0 ? +1 : -1;  // keeps -zeta/(f_y g_x) positive
    double z = nf.zeta;
    nf.scale_x = 2.0 / cp.f_xx;
    nf.scale_y = -2.0 / (cp.f_xx * cp.f_y);
    nf.scale_lambda = -2.0 * z * cp.g_x / (cp.f_xx * cp.G);
    nf.scale_eps = -z / fy_gx;
    if (!(nf.scale_eps > 0) || !std::isfinite(nf.scale_lambda))
        throw HypothesisError("normal_form: degenerate scale factors");

    nf.a.assign(5 + sys.m(), 0.0);
    nf.a[0] = -z * cp.f_xeps / fy_gx;                   // a1
    nf.a[1] = 2.0 * cp.f_xy / (cp.f_y * cp.f_xx);       // a2
    nf.a[2] = (2.0 / 3.0) * cp.f_xxx / (cp.f_xx * cp.f_xx);  // a3
    nf.a[3] = cp.g_xx / (cp.g_x * cp.f_xx);             // a4
    nf.a[4] = -z * cp.g_y / fy_gx;                      // a5
    for (std::size_t k = 0; k < sys.m(); ++k)
        nf.a[5 + k] = z * cp.f_xx * cp.beta_eta[k] / (2.0 * cp.g_x);
    nf.c0 = -z * cp.f_xx * cp.f_eps / (2.0 * fy_gx);
    return nf;
}

// ---------------------------------------------------------------------------
// Oracle path: quadrature of the phi-hat integrals composed with the
// rescaling, then finite differences in x.

namespace nf_detail {

struct BarEval {
    const SlowFastSystem& sys;
    const CanardPointData& cp;

    // f partials at the translated point (a + alpha, b + omega, mu0, 0);
    // the oracle only evaluates at mu = mu0, eps = 0, where the translation
    // is the base contact point itself.
    Bindings pt(double a, double b) const { return sys.at(cp.alpha + a, cp.omega + b); }

    double chain_lambda(const Bindings& b) const {
        // d/d eps of the translated argument bundle through lambda-tilde
        return cp.lambda_tilde_slope *
               (sys.df({"x"}, b) * cp.dx_dlambda + sys.df({"y"}, b) * cp.dy_dlambda +
                sys.df({sys.lambda_name}, b));
    }
    double chain_lambda_x(const Bindings& b) const {
        return cp.lambda_tilde_slope *
               (sys.df({"x", "x"}, b) * cp.dx_dlambda +
                sys.df({"x", "y"}, b) * cp.dy_dlambda +
                sys.df({"x", sys.lambda_name}, b));
    }

    double D2f(double a, double b) const { return sys.df({"y"}, pt(a, b)); }
    double D12f(double a, double b) const { return sys.df({"x", "y"}, pt(a, b)); }
    double D11f(double a, double b) const { return sys.df({"x", "x"}, pt(a, b)); }
    double Depsf(double a, double b) const {
        Bindings bb = pt(a, b);
        return sys.df({"eps"}, bb) + chain_lambda(bb);
    }
    double D1epsf(double a, double b) const {
        Bindings bb = pt(a, b);
        return sys.df({"x", "eps"}, bb) + chain_lambda_x(bb);
    }
    double D1g(double a, double b) const { return sys.dg({"x"}, pt(a, b)); }

    // g-bar at displaced (y, eta) arguments; eta displacement moves the
    // contact translation, which is re-solved exactly.
    double gbar(double yoff, std::size_t eta_index, double eta_off) const {
        std::vector<double> eta = sys.eta0;
        if (eta_off != 0.0) eta[eta_index] += eta_off;
        ContactPoint p = eta_off == 0.0
                             ? ContactPoint{cp.alpha, cp.omega}
                             : solve_contact_exact(sys, cp, sys.lambda0, eta);
        Bindings b = sys.at_mu(p.x, p.y + yoff, sys.lambda0, eta, 0.0);
        return sys.g.evaluate(b);
    }
};

// phi-hat_1..4 at (X, 0, 0, 0, 0): single and nested integrals over [0,1].
inline double phi_hat(const BarEval& be, int which, double X, double quad_tol) {
    auto inner_double = [&](auto&& D) {
        // int_0^1 int_0^1 u D(uv X, 0) dv du
        auto outer = [&](double u) {
            auto innerf = [&](double v) { return D(u * v * X, 0.0); };
            return u * integrate_or_throw(innerf, 0.0, 1.0, quad_tol * 0.1);
        };
        return integrate_or_throw(outer, 0.0, 1.0, quad_tol);
    };
    switch (which) {
        case 1: {
            double base = be.D2f(0, 0);
            auto single = [&](double u) { return be.D2f(u * X, 0.0); };
            return -base + integrate_or_throw(single, 0.0, 1.0, quad_tol) +
                   X * inner_double([&](double a, double b) { return be.D12f(a, b); });
        }
        case 2: {
            double base = 0.5 * be.D11f(0, 0);
            return -base + inner_double([&](double a, double b) { return be.D11f(a, b); });
        }
        case 3: {
            double base = be.Depsf(0, 0);
            auto single = [&](double u) { return be.Depsf(u * X, 0.0); };
            return -base + integrate_or_throw(single, 0.0, 1.0, quad_tol) +
                   X * inner_double([&](double a, double b) { return be.D1epsf(a, b); });
        }
        case 4: {
            double base = be.D1g(0, 0);
            auto single = [&](double u) { return be.D1g(u * X, 0.0); };
            return -base + integrate_or_throw(single, 0.0, 1.0, quad_tol);
        }
    }
    throw QuadError("phi_hat: bad index");
}

}  // namespace nf_detail

inline std::vector<double> a_coefficients_oracle(const SlowFastSystem& sys,
                                                 const CanardPointData& cp) {
    NormalFormData nf = normal_form(sys, cp);  // scale factors only
    nf_detail::BarEval be{sys, cp};
    const double z = nf.zeta;
    const double A = nf.scale_x;
    const double quad_tol = sys.tol.phi_quad;
    const double h = sys.tol.fd_step;

    auto fd4 = [&](auto&& phi) {
        return (-phi(2 * h) + 8 * phi(h) - 8 * phi(-h) + phi(-2 * h)) / (12 * h);
    };

    std::vector<double> a(5 + sys.m(), 0.0);
    // a1 = d/dx phi3(0), phi3 = scale * (f-bar_eps(0) + phi-hat_3 o T)
    {
        double scale = -z * cp.f_xx / (2.0 * cp.f_y * cp.g_x);
        a[0] = fd4([&](double x) {
            return scale * (be.Depsf(0, 0) + nf_detail::phi_hat(be, 3, A * x, quad_tol));
        });
    }
    // a2 = d/dx phi1(0)
    a[1] = fd4([&](double x) {
        return (1.0 / cp.f_y) * nf_detail::phi_hat(be, 1, A * x, quad_tol);
    });
    // a3 = d/dx phi2(0)
    a[2] = fd4([&](double x) {
        return (2.0 / cp.f_xx) * nf_detail::phi_hat(be, 2, A * x, quad_tol);
    });
    // a4 = d/dx phi4(0)
    a[3] = fd4([&](double x) {
        return (1.0 / cp.g_x) * nf_detail::phi_hat(be, 4, A * x, quad_tol);
    });
    // a5 = phi6(0): numeric y-derivative of g-bar
    {
        double gy = (-be.gbar(2 * h, 0, 0) + 8 * be.gbar(h, 0, 0) -
                     8 * be.gbar(-h, 0, 0) + be.gbar(-2 * h, 0, 0)) /
                    (12 * h);
        a[4] = -z * gy / (cp.f_y * cp.g_x);
    }
    // a_{5+k} = phi_{6+k}(0): numeric eta-derivative of the composed g-bar,
    // contact translation re-solved per sample
    for (std::size_t k = 0; k < sys.m(); ++k) {
        double geta = (-be.gbar(0, k, 2 * h) + 8 * be.gbar(0, k, h) -
                       8 * be.gbar(0, k, -h) + be.gbar(0, k, -2 * h)) /
                      (12 * h);
        a[5 + k] = z * cp.f_xx * geta / (2.0 * cp.g_x);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Truncated normal-form field and its pull-back comparison partner

inline Vec2 normalized_field(const NormalFormData& nf, Vec2 s, double lambda,
                             std::span<const double> eta, double eps) {
    double xp = -s.y * (1.0 + nf.a[1] * s.x) + s.x * s.x * (1.0 + nf.a[2] * s.x) +
                eps * (nf.c0 + nf.a[0] * s.x);
    double slow = nf.zeta * s.x * (1.0 + nf.a[3] * s.x) - lambda + nf.a[4] * s.y;
    for (std::size_t k = 0; k < eta.size(); ++k) slow += nf.a[5 + k] * eta[k];
    return {xp, eps * slow};
}

// Maps normal-form coordinates through the rescaling and the exact
// translations, evaluates the original field and transforms the vector back.
inline Vec2 pulled_back_field(const SlowFastSystem& sys, const NormalFormData& nf,
                              Vec2 s, double lambda, std::span<const double> eta,
                              double eps) {
    double xb = nf.scale_x * s.x;
    double yb = nf.scale_y * s.y;
    double lb = nf.scale_lambda * lambda;
    double eb = nf.scale_eps * eps;
    double ltilde = solve_lambda_tilde_exact(sys, nf.cp, eb);
    double lambda_full = sys.lambda0 + lb + ltilde;
    std::vector<double> eta_full = sys.eta0;
    for (std::size_t k = 0; k < eta.size(); ++k) eta_full[k] += eta[k];
    ContactPoint p = solve_contact_exact(sys, nf.cp, lambda_full, eta_full);
    double X = xb + p.x, Y = yb + p.y;
    Bindings b = sys.at_mu(X, Y, lambda_full, eta_full, eb);
    double dX = sys.f.evaluate(b);
    double dY = eb * sys.g.evaluate(b);
    return {dX / nf.scale_x, dY / nf.scale_y};
}

}  // namespace canardlab

#endif
