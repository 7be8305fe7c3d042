#ifndef CANARDLAB_TEST_HELPERS_HPP
#define CANARDLAB_TEST_HELPERS_HPP

#include <canardlab/system.hpp>

namespace testing_helpers {

// The normalized cubic Lienard system with F(x) = -x^3/3 + x^2/2 at its
// double-canard parameter values lambda = 1/6, eta = 1/12.
inline canardlab::SlowFastSystem lienard_system() {
    canardlab::SlowFastSystem sys;
    sys.lambda_name = "lambda";
    sys.eta_names = {"eta"};
    sys.f = canardlab::parse("-x^3/3 + x^2/2 - y", {"x", "y", "eps", "lambda", "eta"});
    sys.g = canardlab::parse("eta + lambda*(x - 1/2) - (-x^3/3 + x^2/2)",
                             {"x", "y", "eps", "lambda", "eta"});
    sys.lambda0 = 1.0 / 6.0;
    sys.eta0 = {1.0 / 12.0};
    sys.x_lo = -1.0;
    sys.x_hi = 2.0;
    sys.y_lo = -0.6;
    sys.y_hi = 0.8;
    sys.eps = 0.045;
    return sys;
}

// Same field with an added "+eps" term in g, exercising g_eps pathways.
inline canardlab::SlowFastSystem lienard_system_eps_in_g() {
    canardlab::SlowFastSystem sys = lienard_system();
    sys.g = canardlab::parse("eta + lambda*(x - 1/2) - (-x^3/3 + x^2/2) + eps",
                             {"x", "y", "eps", "lambda", "eta"});
    return sys;
}

// The bare canard normal form x' = -y + x^2, y' = eps*(x - lambda); a single
// fold, usable for anything that takes an explicit contact point.
inline canardlab::SlowFastSystem pure_normal_form() {
    canardlab::SlowFastSystem sys;
    sys.lambda_name = "lambda";
    sys.eta_names = {"eta"};
    sys.f = canardlab::parse("x^2 - y", {"x", "y", "eps", "lambda", "eta"});
    sys.g = canardlab::parse("x - lambda", {"x", "y", "eps", "lambda", "eta"});
    sys.lambda0 = 0.0;
    sys.eta0 = {0.0};
    sys.x_lo = -1.0;
    sys.x_hi = 1.0;
    sys.y_lo = -0.5;
    sys.y_hi = 1.0;
    return sys;
}

}  // namespace testing_helpers

#endif
