#include <catch2/catch_amalgamated.hpp>

#include <canardlab/normalform.hpp>

#include <cmath>

#include "test_helpers.hpp"

using namespace canardlab;
using testing_helpers::lienard_system;
using testing_helpers::pure_normal_form;

namespace {

std::pair<NormalFormData, NormalFormData> lienard_normal_forms(const SlowFastSystem& sys) {
    auto pts = find_contact_points(sys);
    auto c1 = classify_contact_point(sys, pts[0]);
    auto c2 = classify_contact_point(sys, pts[1]);
    return {normal_form(sys, c1), normal_form(sys, c2)};
}

// A single-fold system exercising every a-coefficient and both translation
// chains (f depends on lambda, eta and eps; g on eps, y and eta).
SlowFastSystem rich_system() {
    SlowFastSystem sys;
    sys.eta_names = {"eta"};
    sys.f = parse("x^2 - y + lambda*(x + x^2) + eps*x + 0.3*x*y + 0.2*x^3 + 0.15*eta*x");
    sys.g = parse("x - lambda + eps + 0.5*eta + 0.4*y + 0.35*x^2");
    sys.lambda0 = 0.0;
    sys.eta0 = {0.0};
    sys.x_lo = -0.5; sys.x_hi = 0.5; sys.y_lo = -0.5; sys.y_hi = 0.5;
    return sys;
}

}  // namespace

TEST_CASE("lienard normal form coefficients at both canard points") {
    auto sys = lienard_system();
    auto [nf1, nf2] = lienard_normal_forms(sys);

    // eps scale must be positive at both points, which forces zeta = +1 here
    CHECK(nf1.scale_eps == Catch::Approx(6.0));
    CHECK(nf2.scale_eps == Catch::Approx(6.0));
    CHECK(nf1.zeta == 1);
    CHECK(nf2.zeta == 1);

    // the paper-style per-point orientation flips
    CHECK(nf1.orientation == +1);
    CHECK(nf2.orientation == -1);

    // translation scale factors reproduce the hand transformation
    CHECK(nf1.scale_x == Catch::Approx(2.0));
    CHECK(nf2.scale_x == Catch::Approx(-2.0));
    CHECK(nf1.scale_y == Catch::Approx(2.0));
    CHECK(nf2.scale_y == Catch::Approx(-2.0));
    CHECK(nf1.scale_lambda == Catch::Approx(2.0 / 3.0));
    CHECK(nf2.scale_lambda == Catch::Approx(2.0 / 3.0));

    // a1..a5 agree between the two points; a6 flips with the orientation
    REQUIRE(nf1.a.size() == 6);
    for (int k = 0; k < 5; ++k) CHECK(nf1.a[k] == Catch::Approx(nf2.a[k]).margin(1e-12));
    CHECK(nf1.a[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(nf1.a[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(nf1.a[2] == Catch::Approx(-4.0 / 3.0).margin(1e-12));
    CHECK(nf1.a[3] == Catch::Approx(-6.0).margin(1e-12));
    CHECK(nf1.a[4] == Catch::Approx(0.0).margin(1e-12));
    CHECK(nf1.a[5] == Catch::Approx(3.0).margin(1e-12));
    CHECK(nf2.a[5] == Catch::Approx(-3.0).margin(1e-12));
    CHECK(nf1.a[5] == Catch::Approx(3.0 * nf1.orientation));
    CHECK(nf2.a[5] == Catch::Approx(3.0 * nf2.orientation));
}

TEST_CASE("pure normal form has vanishing a-coefficients") {
    auto sys = pure_normal_form();
    auto c = classify_contact_point(sys, {0.0, 0.0});
    auto nf = normal_form(sys, c);
    for (double ak : nf.a) CHECK(std::abs(ak) < 1e-12);
    auto oracle = a_coefficients_oracle(sys, c);
    for (double ak : oracle) CHECK(std::abs(ak) < 1e-10);
}

TEST_CASE("rich system: closed-form coefficients match hand values") {
    auto sys = rich_system();
    auto c = classify_contact_point(sys, {0.0, 0.0});
    REQUIRE(c.kind == ContactKind::Canard);
    auto nf = normal_form(sys, c);
    CHECK(nf.zeta == 1);
    CHECK(nf.a[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(nf.a[1] == Catch::Approx(-0.3).margin(1e-12));
    CHECK(nf.a[2] == Catch::Approx(0.2).margin(1e-12));
    CHECK(nf.a[3] == Catch::Approx(0.35).margin(1e-12));
    CHECK(nf.a[4] == Catch::Approx(0.4).margin(1e-12));
    CHECK(nf.a[5] == Catch::Approx(0.425).margin(1e-12));
}

TEST_CASE("oracle path agrees with the closed form") {
    for (auto sys : {lienard_system(), rich_system()}) {
        auto pts = find_contact_points_lenient(sys);
        for (const auto& p : pts) {
            auto c = classify_contact_point(sys, p);
            if (c.kind != ContactKind::Canard) continue;
            auto nf = normal_form(sys, c);
            auto oracle = a_coefficients_oracle(sys, c);
            REQUIRE(oracle.size() == nf.a.size());
            for (std::size_t k = 0; k < oracle.size(); ++k) {
                INFO("x=" << p.x << " a[" << k << "]");
                CHECK(std::abs(oracle[k] - nf.a[k]) < 1e-6);
            }
        }
    }
}

TEST_CASE("a3 responds linearly to an added cubic term") {
    auto make = [](double cc) {
        SlowFastSystem sys;
        sys.eta_names = {"eta"};
        sys.f = parse("x^2 - y + " + std::to_string(cc) + "*x^3");
        sys.g = parse("x - lambda + 0*eta");
        sys.lambda0 = 0; sys.eta0 = {0};
        sys.x_lo = -0.4; sys.x_hi = 0.4; sys.y_lo = -0.5; sys.y_hi = 0.5;
        return sys;
    };
    double c1v = 0.35;
    auto s1 = make(c1v), s2 = make(2 * c1v);
    auto a1 = normal_form(s1, classify_contact_point(s1, {0, 0})).a;
    auto a2 = normal_form(s2, classify_contact_point(s2, {0, 0})).a;
    // the rescaling fixes the slope: a3 = (2/3) f_xxx / f_xx^2 = c
    CHECK(a1[2] == Catch::Approx(c1v).margin(1e-12));
    CHECK(std::abs(a2[2] - 2 * a1[2]) < 1e-8);
}

TEST_CASE("normalized field point values") {
    auto sys = lienard_system();
    auto [nf1, nf2] = lienard_normal_forms(sys);
    double eta0[1] = {0.0};

    Vec2 v0 = normalized_field(nf1, {0.0, 0.0}, 0.0, eta0, 0.0);
    CHECK(v0.x == 0.0);
    CHECK(v0.y == 0.0);

    Vec2 v1 = normalized_field(nf1, {0.1, 0.0}, 0.0, eta0, 0.0);
    CHECK(v1.x == Catch::Approx(0.01 * (1 - 0.4 / 3.0)).margin(1e-15));
}

TEST_CASE("pull-back consistency: truncation error is cubic") {
    auto sys = lienard_system();
    auto [nf1, nf2] = lienard_normal_forms(sys);
    for (const auto& nf : {nf1, nf2}) {
        // directions mixing state and parameters
        const double dir[5] = {0.7, -0.4, 0.5, 0.6, 0.8};
        std::vector<double> errs;
        std::vector<double> deltas;
        for (int k = 0; k < 5; ++k) {
            double delta = 0.04 * std::pow(0.5, k);
            Vec2 s{dir[0] * delta, dir[1] * delta};
            double lambda = dir[2] * delta;
            double eta[1] = {dir[3] * delta};
            double eps = dir[4] * delta;
            Vec2 a = normalized_field(nf, s, lambda, eta, eps);
            Vec2 b = pulled_back_field(sys, nf, s, lambda, eta, eps);
            errs.push_back((a - b).norm());
            deltas.push_back(delta);
        }
        // least-squares slope of log(err) vs log(delta)
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = static_cast<int>(errs.size());
        for (int k = 0; k < n; ++k) {
            double lx = std::log(deltas[k]), ly = std::log(errs[k] + 1e-300);
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        INFO("fitted order " << slope);
        CHECK(slope >= 2.7);
    }
}

TEST_CASE("exact contact solve tracks the linear prediction") {
    auto sys = rich_system();
    auto c = classify_contact_point(sys, {0.0, 0.0});
    double delta = 1e-4;
    std::vector<double> eta = sys.eta0;
    ContactPoint p = solve_contact_exact(sys, c, sys.lambda0 + delta, eta);
    CHECK(std::abs(p.x - (c.alpha + c.dx_dlambda * delta)) < 5e-7);
    CHECK(std::abs(p.y - (c.omega + c.dy_dlambda * delta)) < 5e-7);
    // residuals of the defining equations
    Bindings b = sys.at_mu(p.x, p.y, sys.lambda0 + delta, eta, 0.0);
    CHECK(std::abs(sys.f.evaluate(b)) < 1e-12);
    CHECK(std::abs(sys.df({"x"}, b)) < 1e-12);
}

TEST_CASE("exact lambda-tilde solve matches its slope") {
    auto sys = rich_system();
    auto c = classify_contact_point(sys, {0.0, 0.0});
    CHECK(c.lambda_tilde_slope == Catch::Approx(2.0 / 3.0).margin(1e-12));
    double eps = 1e-5;
    double lt = solve_lambda_tilde_exact(sys, c, eps);
    CHECK(lt == Catch::Approx(c.lambda_tilde_slope * eps).epsilon(1e-3));
}
