#ifndef CANARDLAB_MELNIKOV_HPP
#define CANARDLAB_MELNIKOV_HPP

// Heteroclinic splitting in the family-rescaling chart: the distance-function
// coefficients in closed form and by quadrature, direct shooting across the
// broken connection, and the two-point canard conditions that produce the
// parameter curve of the double canard.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "normalform.hpp"
#include "ode.hpp"
#include "quadrature.hpp"
#include "sysmodel.hpp"

namespace canardlab {

struct MelnikovCoeffs {
    double d_r2 = 0;
    double d_lambda2 = 0;
    std::vector<double> d_eta2;
};

inline double sqrt_2pi() { return std::sqrt(2.0 * M_PI); }

// Heteroclinic orbit of the integrable chart system and the adjoint solution
// weighting the Melnikov integrals.
inline Vec2 gamma_orbit(double t) { return {0.5 * t, 0.25 * t * t - 0.5}; }
inline Vec2 gamma_adjoint(double t) {
    double w = std::exp(-0.5 * t * t);
    return {-t * w, w};
}

// First integral of the integrable chart system.
inline double chart2_first_integral(const Vec2& s) {
    return 0.5 * std::exp(-2.0 * s.y) * (s.y - s.x * s.x + 0.5);
}

// Truncated chart-K2 vector field (the quadratic remainder in the small
// parameters is dropped).
inline Vec2 chart2_field(std::span<const double> a, const Vec2& s, double r2,
                         double lambda2, std::span<const double> eta2) {
    double xp = -s.y + s.x * s.x +
                r2 * (a[0] * s.x - a[1] * s.x * s.y + a[2] * s.x * s.x * s.x);
    double yp = s.x - lambda2 + r2 * (a[3] * s.x * s.x + a[4] * s.y);
    for (std::size_t k = 0; k < eta2.size(); ++k) yp += a[5 + k] * eta2[k];
    return {xp, yp};
}

inline Mat2 chart2_jacobian(std::span<const double> a, const Vec2& s, double r2) {
    return {2.0 * s.x + r2 * (a[0] - a[1] * s.y + 3.0 * a[2] * s.x * s.x),
            -1.0 - r2 * a[1] * s.x,
            1.0 + 2.0 * r2 * a[3] * s.x,
            r2 * a[4]};
}

// ---------------------------------------------------------------------------
// Distance-function coefficients

inline MelnikovCoeffs distance_closed_form(std::span<const double> a) {
    MelnikovCoeffs out;
    double s2p = sqrt_2pi();
    out.d_r2 = -s2p / 8.0 * (4 * a[0] - a[1] + 3 * a[2] - 2 * a[3] + 2 * a[4]);
    out.d_lambda2 = -s2p;
    for (std::size_t k = 5; k < a.size(); ++k) out.d_eta2.push_back(s2p * a[k]);
    return out;
}

// The same coefficients as adjoint-weighted integrals of the parameter
// derivatives of the chart field along the heteroclinic orbit.
inline MelnikovCoeffs distance_quadrature(std::span<const double> a, double T = 12.0,
                                          double tol = 1e-12) {
    MelnikovCoeffs out;
    auto r2_integrand = [&](double t) {
        Vec2 g = gamma_orbit(t), ad = gamma_adjoint(t);
        double dx = a[0] * g.x - a[1] * g.x * g.y + a[2] * g.x * g.x * g.x;
        double dy = a[3] * g.x * g.x + a[4] * g.y;
        return ad.x * dx + ad.y * dy;
    };
    out.d_r2 = integrate_or_throw(r2_integrand, -T, T, tol);
    auto l2_integrand = [&](double t) { return -gamma_adjoint(t).y; };
    out.d_lambda2 = integrate_or_throw(l2_integrand, -T, T, tol);
    for (std::size_t k = 5; k < a.size(); ++k) {
        auto e_integrand = [&](double t) { return gamma_adjoint(t).y * a[k]; };
        out.d_eta2.push_back(integrate_or_throw(e_integrand, -T, T, tol));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Direct shooting across the broken heteroclinic connection

// Integrates the truncated chart field forward from gamma(-T) and backward
// from gamma(+T); the exponential transverse attraction of the parabola
// branches lands both orbits on the perturbed invariant curves by the time
// they reach the section x2 = 0.  Returns y_{2,a} - y_{2,r}.
inline double measure_splitting(std::span<const double> a, double r2, double lambda2,
                                std::span<const double> eta2, double T = 12.0,
                                double ode_tol = 1e-11) {
    Field2 F = [&](const Vec2& s) { return chart2_field(a, s, r2, lambda2, eta2); };
    Jacobian2 J = [&](const Vec2& s) { return chart2_jacobian(a, s, r2); };
    OdeOptions opt;
    opt.tol = ode_tol;
    EventSpec ev;
    ev.value = [](const Vec2& s) { return s.x; };
    ev.direction = 0;
    ev.t_min = 0.1;

    auto attracting = integrate_ode(F, J, gamma_orbit(-T), 0.0, 3.0 * T, opt, &ev);
    if (!attracting.event_hit)
        throw OdeError("measure_splitting: attracting orbit missed the section");
    auto repelling = integrate_ode(F, J, gamma_orbit(T), 0.0, -3.0 * T, opt, &ev);
    if (!repelling.event_hit)
        throw OdeError("measure_splitting: repelling orbit missed the section");
    return attracting.y_event.y - repelling.y_event.y;
}

// ---------------------------------------------------------------------------
// Two-point canard conditions (Lemma 4.2 / Theorem A data)

struct CanardCurve {
    std::size_t eta_index = 0;
    double A[2] = {0, 0};
    double B[2] = {0, 0};
    double C[2] = {0, 0};
    double det = 0;           // A1 B2 - A2 B1
    double lambda_slope = 0;  // d lambda / d eps at 0
    double eta_slope = 0;     // d eta_i / d eps at 0
};

namespace mel_detail {

// Linear coefficients of the matching equation at one canard point:
//   A_j (lambda - lambda0) + B_j (eta_i - eta_i0) = C_j eps.
struct MatchRow {
    double A, B, C;
};

inline MatchRow match_row(const NormalFormData& nf, const MelnikovCoeffs& mel,
                          std::size_t eta_index) {
    const CanardPointData& c = nf.cp;
    MatchRow row;
    row.A = -c.f_xx * c.G / (2.0 * c.g_x) * mel.d_lambda2;
    row.B = nf.zeta * mel.d_eta2.at(eta_index);
    row.C = c.f_y * c.g_x * mel.d_r2 +
            c.f_xx * c.g_eps / (2.0 * c.g_x) * mel.d_lambda2;
    return row;
}

}  // namespace mel_detail

inline CanardCurve canard_curve_expansion(const NormalFormData& nf1,
                                          const NormalFormData& nf2,
                                          const MelnikovCoeffs& mel1,
                                          const MelnikovCoeffs& mel2,
                                          std::size_t eta_index) {
    CanardCurve cc;
    cc.eta_index = eta_index;
    auto r1 = mel_detail::match_row(nf1, mel1, eta_index);
    auto r2 = mel_detail::match_row(nf2, mel2, eta_index);
    cc.A[0] = r1.A; cc.A[1] = r2.A;
    cc.B[0] = r1.B; cc.B[1] = r2.B;
    cc.C[0] = r1.C; cc.C[1] = r2.C;
    cc.det = r1.A * r2.B - r2.A * r1.B;
    if (cc.det == 0.0)
        throw SolveError("canard_curve_expansion: A1*B2 - A2*B1 = 0");
    cc.lambda_slope = (r2.B * r1.C - r1.B * r2.C) / cc.det;
    cc.eta_slope = (r1.A * r2.C - r2.A * r1.C) / cc.det;
    return cc;
}

// Newton solve of the two simultaneous linearized distance equations for
// (lambda, eta_i) at a given eps.
inline std::pair<double, double> solve_canard_pair(const SlowFastSystem& sys,
                                                   const NormalFormData& nf1,
                                                   const NormalFormData& nf2,
                                                   const MelnikovCoeffs& mel1,
                                                   const MelnikovCoeffs& mel2,
                                                   double eps, std::size_t eta_index) {
    auto r1 = mel_detail::match_row(nf1, mel1, eta_index);
    auto r2 = mel_detail::match_row(nf2, mel2, eta_index);
    double det = r1.A * r2.B - r2.A * r1.B;
    double scale = std::max({1.0, std::abs(r1.A * r2.B), std::abs(r2.A * r1.B)});
    if (std::abs(det) <= sys.tol.rank_det * scale)
        throw SolveError("solve_canard_pair: rank-deficient matching equations");

    // The matching equations are affine; Newton with the analytic Jacobian
    // [[A1,B1],[A2,B2]] converges immediately but is kept damped and iterated
    // for uniformity with the spec'd solver contract.
    auto R = [&](double lambda, double eta_i) {
        auto row_res = [&](const NormalFormData& nf, const mel_detail::MatchRow& row,
                           const MelnikovCoeffs& mel) {
            const CanardPointData& c = nf.cp;
            double ltilde = c.lambda_tilde_slope * eps;
            double r = -c.f_y * c.g_x * mel.d_r2 * eps -
                       c.f_xx * c.G / (2.0 * c.g_x) * mel.d_lambda2 *
                           (lambda - sys.lambda0 - ltilde) +
                       nf.zeta * mel.d_eta2.at(eta_index) *
                           (eta_i - sys.eta0.at(eta_index));
            return r;
        };
        return std::pair<double, double>{row_res(nf1, r1, mel1), row_res(nf2, r2, mel2)};
    };
    auto Jac = [&](double, double) {
        // d r_j / d lambda = -f_xx G/(2 g_x) d_lambda2 = A_j (sign folded in)
        return std::array<double, 4>{r1.A, r1.B, r2.A, r2.B};
    };
    auto res = newton2d(R, Jac, sys.lambda0, sys.eta0.at(eta_index), 1e-12);
    if (!res.converged) throw SolveError("solve_canard_pair: Newton diverged");
    return {res.u, res.v};
}

}  // namespace canardlab

#endif
