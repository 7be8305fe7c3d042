#ifndef CANARDLAB_QUADRATURE_HPP
#define CANARDLAB_QUADRATURE_HPP

// Adaptive Gauss-Kronrod (G7,K15) quadrature.  The Kronrod nodes are strictly
// interior, so endpoints are never evaluated; integrands with removable
// endpoint singularities (the slow divergence integrals at canard points)
// need no special casing.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace canardlab {

struct QuadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadResult {
    double value = 0;
    double error = 0;
    int evaluations = 0;
    bool converged = false;
};

namespace gk_detail {

// 15-point Kronrod abscissae on [0,1] half-interval and weights; the embedded
// 7-point Gauss rule uses the odd-indexed nodes.
inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void kronrod15(F&& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * xgk[i]);
        fv[14 - i] = f(c + h * xgk[i]);
    }
    fv[7] = f(c);
    double resk = wgk[7] * fv[7];
    double resg = wg[3] * fv[7];
    for (int i = 0; i < 7; ++i) resk += wgk[i] * (fv[i] + fv[14 - i]);
    for (int i = 0; i < 3; ++i) resg += wg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    value = resk * h;
    err = std::abs((resk - resg) * h);
}

struct Segment {
    double a, b, value, err;
    bool operator<(const Segment& o) const { return err < o.err; }
};

}  // namespace gk_detail

// Integrates f over [a,b] (a > b allowed) splitting the worst segment until
// the summed error estimate drops below max(abs_tol, rel_tol*|I|).
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                              double rel_tol = 0.0, int max_segments = 4000) {
    QuadResult out;
    if (a == b) { out.converged = true; return out; }
    double sign = 1.0;
    if (a > b) { std::swap(a, b); sign = -1.0; }

    std::vector<gk_detail::Segment> heap;
    gk_detail::Segment s{a, b, 0, 0};
    gk_detail::kronrod15(f, a, b, s.value, s.err);
    out.evaluations = 15;
    heap.push_back(s);
    double total = s.value, errsum = s.err;

    for (;;) {
        double tol = std::max(abs_tol, rel_tol * std::abs(total));
        if (errsum <= tol) {
            out.value = sign * total;
            out.error = errsum;
            out.converged = true;
            return out;
        }
        if (static_cast<int>(heap.size()) >= max_segments) {
            out.value = sign * total;
            out.error = errsum;
            out.converged = false;
            return out;
        }
        std::pop_heap(heap.begin(), heap.end());
        gk_detail::Segment worst = heap.back();
        heap.pop_back();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval exhausted at double precision; keep its estimate
            errsum -= worst.err;
            worst.err = 0;
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end());
            continue;
        }
        gk_detail::Segment left{worst.a, mid, 0, 0}, right{mid, worst.b, 0, 0};
        gk_detail::kronrod15(f, left.a, left.b, left.value, left.err);
        gk_detail::kronrod15(f, right.a, right.b, right.value, right.err);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        errsum += left.err + right.err - worst.err;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end());
    }
}

template <class F>
double integrate_or_throw(F&& f, double a, double b, double abs_tol,
                          double rel_tol = 0.0, int max_segments = 4000) {
    QuadResult r = integrate_adaptive(f, a, b, abs_tol, rel_tol, max_segments);
    if (!r.converged)
        throw QuadError("quadrature failed to converge (error " +
                        std::to_string(r.error) + ")");
    return r.value;
}

}  // namespace canardlab

#endif
