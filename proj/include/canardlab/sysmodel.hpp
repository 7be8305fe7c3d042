#ifndef CANARDLAB_SYSMODEL_HPP
#define CANARDLAB_SYSMODEL_HPP

// Critical-curve geometry, hypothesis verification and the implicit-function
// data attached to the two contact points.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rootfind.hpp"
#include "system.hpp"

namespace canardlab {

struct HypothesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContactPoint {
    double x = 0, y = 0;
};

enum class ContactKind { Canard, Jump, NonTransversal };

inline const char* to_string(ContactKind k) {
    switch (k) {
        case ContactKind::Canard: return "canard";
        case ContactKind::Jump: return "jump";
        case ContactKind::NonTransversal: return "non-transversal";
    }
    return "?";
}

// Everything the later stages need at one contact point P = (alpha, omega,
// mu0, 0): the partial-derivative bundle, the contact-manifold slopes from
// the implicit function theorem, the transversality number G and the row of
// beta-derivatives.
struct CanardPointData {
    double alpha = 0, omega = 0;
    ContactKind kind = ContactKind::Jump;
    int orientation = +1;  // sign of phi'' at alpha: +1 at the minimum fold

    double f_x = 0, f_y = 0, f_xx = 0, f_xy = 0, f_xxx = 0;
    double f_eps = 0, f_lambda = 0, f_xlambda = 0, f_xeps = 0;
    std::vector<double> f_eta, f_xeta;
    double g_val = 0, g_x = 0, g_y = 0, g_lambda = 0, g_eps = 0, g_xx = 0;
    std::vector<double> g_eta;

    double dx_dlambda = 0, dy_dlambda = 0;
    std::vector<double> dx_deta, dy_deta;

    double G = 0;                  // transversality of (H4)
    double lambda_tilde_slope = 0; // d(lambda-tilde)/d(eps) at 0
    double beta_lambda = 0;        // d(beta)/d(lambda) = G
    std::vector<double> beta_eta;  // d(beta)/d(eta_k)
};

// ---------------------------------------------------------------------------
// Critical curve y = phi(x)

// Solves f(x, y, mu0, 0) = 0 for y inside the window.  Linear-in-y systems
// (graph form) are solved exactly; otherwise a scan brackets the single root
// and Newton finishes.
inline double critical_value(const SlowFastSystem& sys, double x) {
    const Expr& fy = sys.deriv_f({"y"});
    if (fy.is_const()) {
        double c = fy.value();
        if (c == 0.0) throw SolveError("critical_value: f is independent of y");
        Bindings b = sys.at(x, 0.0);
        return -sys.f.evaluate(b) / c;
    }
    Bindings b = sys.at(x, 0.0);
    auto fval = [&](double y) {
        b.set("y", y);
        return sys.f.evaluate(b);
    };
    auto fyval = [&](double y) {
        b.set("y", y);
        return fy.evaluate(b);
    };
    const int n = 64;
    double prev = fval(sys.y_lo), ylo = sys.y_lo;
    std::optional<std::pair<double, double>> bracket;
    int crossings = 0;
    for (int i = 1; i <= n; ++i) {
        double y = sys.y_lo + (sys.y_hi - sys.y_lo) * i / n;
        double cur = fval(y);
        if (prev == 0.0 || prev * cur < 0) {
            ++crossings;
            if (!bracket) bracket = {ylo, y};
        }
        prev = cur;
        ylo = y;
    }
    if (crossings == 0)
        throw SolveError("critical_value: no root of f(x,.,mu0,0) in window at x=" +
                         std::to_string(x));
    if (crossings > 1)
        throw SolveError("critical_value: critical set is not a graph over x=" +
                         std::to_string(x) + " (multiple y roots)");
    double y = newton_bracketed(fval, fyval, bracket->first, bracket->second,
                                0.5 * (bracket->first + bracket->second),
                                sys.tol.root_abs);
    if (fyval(y) == 0.0)
        throw SolveError("critical_value: f_y vanishes at the root (non-graph point)");
    return y;
}

// phi'(x) = -f_x/f_y on the critical curve.
inline double critical_slope(const SlowFastSystem& sys, double x) {
    double y = critical_value(sys, x);
    Bindings b = sys.at(x, y);
    return -sys.df({"x"}, b) / sys.df({"y"}, b);
}

// All roots of d/dx f(x, phi(x), mu0, 0) in the window, Newton-polished.
// (H1) promises exactly two; anything else is a hypothesis violation.
inline std::vector<ContactPoint> find_contact_points_lenient(const SlowFastSystem& sys) {
    auto fx_on_curve = [&](double x) {
        double y = critical_value(sys, x);
        Bindings b = sys.at(x, y);
        return sys.df({"x"}, b);
    };
    const int n = 512;
    std::vector<double> roots;
    double span = sys.x_hi - sys.x_lo;
    double prev = fx_on_curve(sys.x_lo), xprev = sys.x_lo;
    for (int i = 1; i <= n; ++i) {
        double x = sys.x_lo + span * i / n;
        double cur = fx_on_curve(x);
        if (prev == 0.0) {
            roots.push_back(xprev);
        } else if (prev * cur < 0) {
            double r = brent(fx_on_curve, xprev, x, 1e-15);
            roots.push_back(r);
        }
        prev = cur;
        xprev = x;
    }
    // Newton polish on f_x along the curve; d/dx f_x = f_xx + f_xy phi'.
    for (double& r : roots) {
        auto dfx = [&](double x) {
            double y = critical_value(sys, x);
            Bindings b = sys.at(x, y);
            return sys.df({"x", "x"}, b) + sys.df({"x", "y"}, b) * critical_slope(sys, x);
        };
        try {
            r = newton(fx_on_curve, dfx, r, sys.tol.root_abs);
        } catch (const SolveError&) {
            // keep the bracketed estimate
        }
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [&](double a, double b) { return std::abs(a - b) < 1e-9 * span; }),
                roots.end());
    std::vector<ContactPoint> pts;
    for (double r : roots) pts.push_back({r, critical_value(sys, r)});
    return pts;
}

inline std::vector<ContactPoint> find_contact_points(const SlowFastSystem& sys) {
    auto pts = find_contact_points_lenient(sys);
    if (pts.size() != 2) {
        std::ostringstream os;
        os << "expected two contact points, found " << pts.size() << ":";
        for (const auto& p : pts) os << " x=" << p.x;
        throw HypothesisError(os.str());
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Contact point classification and implicit-function data

inline void contact_manifold_slopes(const SlowFastSystem& sys, CanardPointData& d) {
    double denom = d.f_y * d.f_xx;
    if (denom == 0.0)
        throw HypothesisError("contact manifold slopes: f_y*f_xx = 0 (H2 fails)");
    auto slope_pair = [&](double f_p, double f_xp) {
        double dx = (f_p * d.f_xy - d.f_y * f_xp) / denom;
        double dy = (d.f_x * f_xp - f_p * d.f_xx) / denom;
        return std::pair<double, double>{dx, dy};
    };
    std::tie(d.dx_dlambda, d.dy_dlambda) = slope_pair(d.f_lambda, d.f_xlambda);
    d.dx_deta.resize(sys.m());
    d.dy_deta.resize(sys.m());
    for (std::size_t k = 0; k < sys.m(); ++k) {
        auto [dx, dy] = slope_pair(d.f_eta[k], d.f_xeta[k]);
        d.dx_deta[k] = dx;
        d.dy_deta[k] = dy;
    }
}

inline double transversality_G(const CanardPointData& d) {
    return d.g_x * d.dx_dlambda + d.g_y * d.dy_dlambda + d.g_lambda;
}

inline CanardPointData classify_contact_point(const SlowFastSystem& sys,
                                              const ContactPoint& pt) {
    CanardPointData d;
    d.alpha = pt.x;
    d.omega = pt.y;
    Bindings P = sys.at(pt.x, pt.y);

    d.f_x = sys.df({"x"}, P);
    d.f_y = sys.df({"y"}, P);
    d.f_xx = sys.df({"x", "x"}, P);
    d.f_xy = sys.df({"x", "y"}, P);
    d.f_xxx = sys.df({"x", "x", "x"}, P);
    d.f_eps = sys.df({"eps"}, P);
    d.f_lambda = sys.df({sys.lambda_name}, P);
    d.f_xlambda = sys.df({"x", sys.lambda_name}, P);
    d.f_xeps = sys.df({"x", "eps"}, P);
    d.g_val = sys.g.evaluate(P);
    d.g_x = sys.dg({"x"}, P);
    d.g_y = sys.dg({"y"}, P);
    d.g_lambda = sys.dg({sys.lambda_name}, P);
    d.g_eps = sys.dg({"eps"}, P);
    d.g_xx = sys.dg({"x", "x"}, P);
    for (const auto& eta : sys.eta_names) {
        d.f_eta.push_back(sys.df({eta}, P));
        d.f_xeta.push_back(sys.df({"x", eta}, P));
        d.g_eta.push_back(sys.dg({eta}, P));
    }

    if (d.f_xx == 0.0 || d.f_y == 0.0)
        throw HypothesisError("contact point at x=" + std::to_string(pt.x) +
                              " violates (H2): f_xx or f_y vanishes");
    d.orientation = (-d.f_xx / d.f_y) > 0 ? +1 : -1;

    contact_manifold_slopes(sys, d);
    d.G = transversality_G(d);
    d.beta_lambda = d.G;
    d.beta_eta.resize(sys.m());
    for (std::size_t k = 0; k < sys.m(); ++k)
        d.beta_eta[k] = d.g_x * d.dx_deta[k] + d.g_y * d.dy_deta[k] + d.g_eta[k];

    if (std::abs(d.g_val) < sys.tol.canard_g) {
        if (std::abs(d.g_x) < sys.tol.sign_margin)
            throw HypothesisError("degenerate canard point at x=" +
                                  std::to_string(pt.x) +
                                  ": g(P)=0 but g_x(P)=0 - unsupported");
        d.kind = std::abs(d.G) >= sys.tol.sign_margin ? ContactKind::Canard
                                                      : ContactKind::NonTransversal;
        if (d.kind == ContactKind::Canard) d.lambda_tilde_slope = -d.g_eps / d.G;
    } else {
        d.kind = ContactKind::Jump;
    }
    return d;
}

// eps-slope of the lambda-tilde(eps) curve that keeps g-tilde zero; requires
// the composed d(g-tilde)/d(lambda) = G to be nonzero.
inline double lambda_tilde_slope(const CanardPointData& d) {
    if (d.G == 0.0)
        throw HypothesisError("lambda_tilde_slope: composed dg/dlambda = 0");
    return -d.g_eps / d.G;
}

// ---------------------------------------------------------------------------
// Hypothesis report

struct HypothesisCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool all_pass = false;
    bool has_saddle = false;
    double saddle_x = 0, saddle_y = 0;
    std::string bendixson;   // "no-limit-cycles" | "inconclusive"
    std::vector<ContactPoint> contact_points;
    std::vector<CanardPointData> canard_data;
};

namespace detail {

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace detail

inline HypothesisReport check_hypotheses(const SlowFastSystem& sys) {
    HypothesisReport rep;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        rep.checks.push_back({name, pass, detail});
    };

    // H1: graph-form critical curve with exactly two extreme points.
    std::vector<ContactPoint> pts;
    try {
        pts = find_contact_points_lenient(sys);
        if (pts.size() == 2)
            add("H1", true,
                "two extreme points at x=" + detail::num(pts[0].x) + ", " +
                    detail::num(pts[1].x));
        else {
            std::string xs;
            for (auto& p : pts) xs += " " + detail::num(p.x);
            add("H1", false,
                "expected two extreme points, found " + std::to_string(pts.size()) + ":" + xs);
        }
    } catch (const std::exception& e) {
        add("H1", false, e.what());
        rep.all_pass = false;
        rep.bendixson = "inconclusive";
        return rep;
    }
    rep.contact_points = pts;
    if (pts.size() != 2) {
        rep.all_pass = false;
        rep.bendixson = "inconclusive";
        return rep;
    }

    const double a1 = pts[0].x, a2 = pts[1].x;
    const double w1 = pts[0].y, w2 = pts[1].y;

    // H2 + classification data.
    bool h2 = true;
    std::string h2detail;
    for (const auto& p : pts) {
        try {
            rep.canard_data.push_back(classify_contact_point(sys, p));
        } catch (const std::exception& e) {
            h2 = false;
            h2detail += std::string(e.what()) + "; ";
        }
    }
    if (h2 && rep.canard_data.size() == 2) {
        const auto& c1 = rep.canard_data[0];
        const auto& c2 = rep.canard_data[1];
        h2detail = "f_xx = (" + detail::num(c1.f_xx) + ", " + detail::num(c2.f_xx) +
                   "), f_y = (" + detail::num(c1.f_y) + ", " + detail::num(c2.f_y) + ")";
    }
    add("H2", h2, h2detail);
    if (!h2) {
        rep.all_pass = false;
        rep.bendixson = "inconclusive";
        return rep;
    }

    // H3: sign of f_x along the curve, with refinement near the folds.
    {
        std::vector<double> xs;
        const int n = 512;
        for (int i = 0; i <= n; ++i)
            xs.push_back(sys.x_lo + (sys.x_hi - sys.x_lo) * i / n);
        for (double a : {a1, a2})
            for (int k = 1; k <= 24; ++k) {
                double dx = (sys.x_hi - sys.x_lo) * std::pow(0.5, k) / n;
                xs.push_back(a - dx);
                xs.push_back(a + dx);
            }
        std::sort(xs.begin(), xs.end());
        bool ok = true;
        std::string witness;
        for (double x : xs) {
            if (x < sys.x_lo || x > sys.x_hi) continue;
            double fx;
            try {
                double y = critical_value(sys, x);
                fx = sys.df({"x"}, sys.at(x, y));
            } catch (const std::exception&) {
                continue;
            }
            bool inside = x > a1 && x < a2;
            if (inside && fx < -sys.tol.sign_margin) {
                ok = false;
                witness = "f_x(" + detail::num(x) + ") = " + detail::num(fx) +
                          " < 0 on the middle branch";
                break;
            }
            if (!inside && fx > sys.tol.sign_margin) {
                ok = false;
                witness = "f_x(" + detail::num(x) + ") = " + detail::num(fx) +
                          " > 0 on an outer branch";
                break;
            }
        }
        add("H3", ok, ok ? "f_x < 0 outside (alpha1,alpha2), > 0 inside" : witness);
    }

    // H4: both contact points are canard points with G != 0.
    {
        const auto& c1 = rep.canard_data[0];
        const auto& c2 = rep.canard_data[1];
        bool ok = c1.kind == ContactKind::Canard && c2.kind == ContactKind::Canard;
        std::string detail = "g(P) = (" + detail::num(c1.g_val) + ", " +
                             detail::num(c2.g_val) + "), G = (" + detail::num(c1.G) +
                             ", " + detail::num(c2.G) + ")";
        if (!ok)
            detail += "; kinds: " + std::string(to_string(c1.kind)) + ", " +
                      to_string(c2.kind);
        add("H4", ok, detail);
    }

    // H5: one saddle on the middle branch, fold orientation, slow-flow
    // directions at the window edges.
    {
        bool ok = true;
        std::string detail;
        auto g_on_curve = [&](double x) {
            double y = critical_value(sys, x);
            return sys.g.evaluate(sys.at(x, y));
        };
        double margin = 1e-6 * (a2 - a1);
        std::vector<double> roots;
        const int n = 512;
        double prev = g_on_curve(a1 + margin), xprev = a1 + margin;
        for (int i = 1; i <= n; ++i) {
            double x = a1 + margin + (a2 - a1 - 2 * margin) * i / n;
            double cur = g_on_curve(x);
            if (prev * cur < 0) roots.push_back(brent(g_on_curve, xprev, x, 1e-15));
            prev = cur;
            xprev = x;
        }
        if (roots.size() != 1) {
            ok = false;
            detail = "expected one middle-branch equilibrium, found " +
                     std::to_string(roots.size());
        } else {
            double xm = roots[0], ym = critical_value(sys, xm);
            rep.has_saddle = true;
            rep.saddle_x = xm;
            rep.saddle_y = ym;
            Bindings E = sys.at(xm, ym);
            double fx = sys.df({"x"}, E);
            double jdet = fx * sys.dg({"y"}, E) - sys.df({"y"}, E) * sys.dg({"x"}, E);
            if (fx <= 0) {
                ok = false;
                detail = "equilibrium at x=" + detail::num(xm) + " has f_x <= 0";
            } else if (jdet >= 0) {
                ok = false;
                detail = "equilibrium at x=" + detail::num(xm) + " is not a saddle";
            } else {
                detail = "saddle at (" + detail::num(xm) + ", " + detail::num(ym) + ")";
            }
        }
        // phi minimum at alpha1, maximum at alpha2
        if (ok) {
            const auto& c1 = rep.canard_data[0];
            const auto& c2 = rep.canard_data[1];
            double phi2_1 = -c1.f_xx / c1.f_y, phi2_2 = -c2.f_xx / c2.f_y;
            if (!(phi2_1 > 0 && phi2_2 < 0 && w1 < w2)) {
                ok = false;
                detail = "phi is not min-at-alpha1 / max-at-alpha2 (phi'' = " +
                         detail::num(phi2_1) + ", " + detail::num(phi2_2) + ")";
            }
        }
        // slow flow direction at the window edges
        if (ok) {
            auto xdot = [&](double x) {
                double y = critical_value(sys, x);
                Bindings b = sys.at(x, y);
                double phip = -sys.df({"x"}, b) / sys.df({"y"}, b);
                return sys.g.evaluate(b) / phip;
            };
            double span = sys.x_hi - sys.x_lo;
            double left = xdot(sys.x_lo + 1e-3 * span);
            double right = xdot(sys.x_hi - 1e-3 * span);
            if (!(left > 0 && right < 0)) {
                ok = false;
                detail = "slow flow directions at window edges: xdot(left)=" +
                         detail::num(left) + ", xdot(right)=" + detail::num(right);
            }
        }
        add("H5", ok, detail);
    }

    // Bendixson: single-signed divergence at eps = 0 rules out limit cycles.
    {
        bool pos = false, neg = false;
        const int n = 64;
        for (int i = 0; i <= n && !(pos && neg); ++i)
            for (int j = 0; j <= n && !(pos && neg); ++j) {
                double x = sys.x_lo + (sys.x_hi - sys.x_lo) * i / n;
                double y = sys.y_lo + (sys.y_hi - sys.y_lo) * j / n;
                double div = sys.df({"x"}, sys.at(x, y));
                if (div > sys.tol.sign_margin) pos = true;
                if (div < -sys.tol.sign_margin) neg = true;
            }
        rep.bendixson = (pos && neg) ? "inconclusive" : "no-limit-cycles";
    }

    rep.all_pass = true;
    for (const auto& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
    return rep;
}

// ---------------------------------------------------------------------------
// Rank condition of Theorem A

struct BetaMatrix {
    double m[2][2] = {{0, 0}, {0, 0}};
    double det = 0;
    int rank = 0;
};

inline BetaMatrix beta_rank(const SlowFastSystem& sys, const CanardPointData& p1,
                            const CanardPointData& p2, std::size_t eta_index) {
    BetaMatrix out;
    out.m[0][0] = p1.beta_lambda;
    out.m[0][1] = p1.beta_eta.at(eta_index);
    out.m[1][0] = p2.beta_lambda;
    out.m[1][1] = p2.beta_eta.at(eta_index);
    out.det = out.m[0][0] * out.m[1][1] - out.m[0][1] * out.m[1][0];
    double n1 = std::hypot(out.m[0][0], out.m[0][1]);
    double n2 = std::hypot(out.m[1][0], out.m[1][1]);
    double scale = std::max(1.0, n1 * n2);
    if (std::abs(out.det) > sys.tol.rank_det * scale)
        out.rank = 2;
    else if (n1 > 0 || n2 > 0)
        out.rank = 1;
    return out;
}

}  // namespace canardlab

#endif
