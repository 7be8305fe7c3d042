#include <catch2/catch_amalgamated.hpp>

#include <canardlab/ode.hpp>
#include <canardlab/quadrature.hpp>
#include <canardlab/rootfind.hpp>

#include <cmath>

using namespace canardlab;

TEST_CASE("gauss-kronrod on smooth and gaussian integrands") {
    auto poly = [](double x) { return 3 * x * x; };
    CHECK(integrate_or_throw(poly, 0.0, 2.0, 1e-12) == Catch::Approx(8.0).epsilon(1e-13));

    auto gauss = [](double t) { return std::exp(-t * t / 2); };
    double sqrt2pi = std::sqrt(2 * M_PI);
    CHECK(integrate_or_throw(gauss, -12.0, 12.0, 1e-12) ==
          Catch::Approx(sqrt2pi).epsilon(1e-12));

    // reversed limits flip the sign
    CHECK(integrate_or_throw(poly, 2.0, 0.0, 1e-12) == Catch::Approx(-8.0));

    // removable endpoint singularity: x*ln(x) on (0,1], open rule never
    // touches x=0
    auto xlnx = [](double x) { return x * std::log(x); };
    CHECK(integrate_or_throw(xlnx, 0.0, 1.0, 1e-11) == Catch::Approx(-0.25).margin(1e-9));
}

TEST_CASE("brent and bracketed newton") {
    auto f = [](double x) { return x * x - 2; };
    CHECK(brent(f, 0.0, 2.0) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
    auto df = [](double x) { return 2 * x; };
    CHECK(newton_bracketed(f, df, 0.0, 2.0, 1.0, 1e-14) ==
          Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(brent(f, 2.0, 3.0), SolveError);
}

TEST_CASE("newton2d solves a nonlinear pair") {
    auto R = [](double u, double v) {
        return std::pair<double, double>{u * u + v - 3, u - v + 1};
    };
    auto J = [](double u, double) {
        return std::array<double, 4>{2 * u, 1.0, 1.0, -1.0};
    };
    auto r = newton2d(R, J, 2.0, 2.0, 1e-13);
    REQUIRE(r.converged);
    CHECK(r.u == Catch::Approx(1.0).margin(1e-10));
    CHECK(r.v == Catch::Approx(2.0).margin(1e-10));
}

namespace {

// Decoupled linear stiff problem with a known solution.
Vec2 stiff_rhs(const Vec2& y) { return {-y.x, -1000.0 * y.y}; }
Mat2 stiff_jac(const Vec2&) { return {-1.0, 0.0, 0.0, -1000.0}; }

}  // namespace

TEST_CASE("rosenbrock handles a stiff linear system") {
    OdeOptions opt;
    opt.tol = 1e-10;
    auto res = integrate_ode(stiff_rhs, stiff_jac, {1.0, 1.0}, 0.0, 1.0, opt);
    CHECK(res.y.x == Catch::Approx(std::exp(-1.0)).margin(1e-8));
    CHECK(std::abs(res.y.y) < 1e-8);
    // stiffness ratio 1000 must not force thousands of steps per unit time
    CHECK(res.stats.steps < 20000);
}

TEST_CASE("rosenbrock order: fixed-step global error scales as h^4") {
    double errs[3];
    double hs[3] = {0.04, 0.02, 0.01};
    for (int k = 0; k < 3; ++k) {
        OdeOptions opt;
        opt.fixed_step = hs[k];
        auto res = integrate_ode(stiff_rhs, stiff_jac, {1.0, 1.0}, 0.0, 1.0, opt);
        errs[k] = std::abs(res.y.x - std::exp(-1.0));
    }
    double p1 = std::log2(errs[0] / errs[1]);
    double p2 = std::log2(errs[1] / errs[2]);
    CHECK(p1 > 3.3);
    CHECK(p2 > 3.3);
    CHECK(p1 < 4.7);
    CHECK(p2 < 4.7);
}

TEST_CASE("event location on a rotation") {
    // x' = -y, y' = x: from (1,0) the first crossing of x=0 going down is at
    // t = pi/2, y = 1.
    Field2 F = [](const Vec2& v) { return Vec2{-v.y, v.x}; };
    Jacobian2 J = [](const Vec2&) { return Mat2{0, -1, 1, 0}; };
    OdeOptions opt;
    opt.tol = 1e-11;
    EventSpec ev;
    ev.value = [](const Vec2& v) { return v.x; };
    ev.direction = -1;
    auto res = integrate_ode(F, J, {1.0, 0.0}, 0.0, 10.0, opt, &ev);
    REQUIRE(res.event_hit);
    CHECK(res.t_event == Catch::Approx(M_PI / 2).margin(1e-8));
    CHECK(res.y_event.y == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("backward integration") {
    Field2 F = [](const Vec2& v) { return Vec2{v.x, -v.y}; };
    Jacobian2 J = [](const Vec2&) { return Mat2{1, 0, 0, -1}; };
    OdeOptions opt;
    opt.tol = 1e-10;
    auto res = integrate_ode(F, J, {1.0, 1.0}, 0.0, -1.0, opt);
    CHECK(res.y.x == Catch::Approx(std::exp(-1.0)).margin(1e-8));
    CHECK(res.y.y == Catch::Approx(std::exp(1.0)).margin(1e-7));
}

TEST_CASE("fixed point stays put") {
    Field2 F = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    Jacobian2 J = [](const Vec2&) { return Mat2{0, 0, 0, 0}; };
    OdeOptions opt;
    auto res = integrate_ode(F, J, {0.3, -0.2}, 0.0, 50.0, opt);
    CHECK(res.y.x == Catch::Approx(0.3).margin(1e-10));
    CHECK(res.y.y == Catch::Approx(-0.2).margin(1e-10));
}
