#ifndef CANARDLAB_SYSTEM_HPP
#define CANARDLAB_SYSTEM_HPP

#include <algorithm>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "expr.hpp"

namespace canardlab {

struct Tolerances {
    double root_abs = 1e-12;     // Newton polish target for roots
    double sign_margin = 1e-9;   // hypothesis sign-check margin
    double canard_g = 1e-9;      // |g(P)| below this counts as a canard point
    double quad_abs = 1e-10;     // slow divergence integral tolerance
    double phi_quad = 1e-12;     // normal-form oracle quadrature tolerance
    double rank_det = 1e-10;     // rank-2 determinant threshold
    double ode = 1e-8;           // default trace tolerance
    double melnikov_T = 12.0;    // Melnikov truncation half-width
    double cycle_residual = 1e-8;   // ||R|| target for (s1*,s2*)
    double fd_step = 1e-4;          // oracle finite-difference step
};

// A planar slow-fast system  eps*x' = f(x,y,mu,eps), y' = g(x,y,mu,eps) with
// breaking parameter lambda and slow parameters eta_1..eta_m, held together
// with the base point mu0 and the analysis window.  Immutable after setup;
// the derivative cache is the only mutable state and is guarded.
class SlowFastSystem {
public:
    Expr f, g;
    std::string lambda_name = "lambda";
    std::vector<std::string> eta_names;
    double lambda0 = 0;
    std::vector<double> eta0;
    double x_lo = -1, x_hi = 1, y_lo = -1, y_hi = 1;
    double eps = 0.01;
    Tolerances tol;

    std::size_t m() const { return eta_names.size(); }

    std::vector<std::string> roster() const {
        std::vector<std::string> r{"x", "y", "eps", lambda_name};
        r.insert(r.end(), eta_names.begin(), eta_names.end());
        return r;
    }

    // Bindings at (x, y) with mu = mu0 and eps = eps_v.
    Bindings at(double x, double y, double eps_v = 0.0) const {
        Bindings b;
        b.set("x", x);
        b.set("y", y);
        b.set("eps", eps_v);
        b.set(lambda_name, lambda0);
        for (std::size_t k = 0; k < eta_names.size(); ++k) b.set(eta_names[k], eta0[k]);
        return b;
    }

    Bindings at_mu(double x, double y, double lambda, std::span<const double> eta,
                   double eps_v) const {
        Bindings b;
        b.set("x", x);
        b.set("y", y);
        b.set("eps", eps_v);
        b.set(lambda_name, lambda);
        for (std::size_t k = 0; k < eta_names.size(); ++k) b.set(eta_names[k], eta[k]);
        return b;
    }

    // Memoized symbolic partials of f and g.  Differentiation order is
    // canonicalized since the expressions are smooth.
    const Expr& deriv_f(std::vector<std::string> vars) const { return deriv(true, std::move(vars)); }
    const Expr& deriv_g(std::vector<std::string> vars) const { return deriv(false, std::move(vars)); }

    double df(std::vector<std::string> vars, const Bindings& b) const {
        return deriv(true, std::move(vars)).evaluate(b);
    }
    double dg(std::vector<std::string> vars, const Bindings& b) const {
        return deriv(false, std::move(vars)).evaluate(b);
    }

private:
    // Derivative memo; deliberately dropped on copy so edited copies never
    // see stale trees.
    struct DerivCache {
        mutable std::mutex mu;
        mutable std::map<std::string, Expr> map;
        DerivCache() = default;
        DerivCache(const DerivCache&) {}
        DerivCache& operator=(const DerivCache&) {
            map.clear();
            return *this;
        }
    };
    DerivCache cache_;

    const Expr& deriv(bool is_f, std::vector<std::string> vars) const {
        std::sort(vars.begin(), vars.end());
        std::string key = is_f ? "f" : "g";
        for (const auto& v : vars) { key += ':'; key += v; }
        std::lock_guard<std::mutex> lock(cache_.mu);
        auto it = cache_.map.find(key);
        if (it != cache_.map.end()) return it->second;
        Expr d = is_f ? f : g;
        for (const auto& v : vars) d = d.differentiate(v);
        return cache_.map.emplace(key, std::move(d)).first->second;
    }
};

}  // namespace canardlab

#endif
