#include <doctest.h>

#include "fdelab/asymptotics.hpp"
#include "fdelab/errors.hpp"

#include <cmath>

using namespace fdelab;

namespace {

Profile deep_profile(double beta, double lambda) {
    GridSpec spec;
    spec.r_max = 1e24;
    return solve_profile(derive_params(3, 0.2, beta), lambda, spec);
}

WTrace zero_trace(std::size_t n) {
    WTrace tr;
    for (std::size_t k = 0; k < n; ++k) {
        tr.s.push_back(-70.0 + 0.1 * static_cast<double>(k));
        tr.g.push_back(1.0);
        tr.w.push_back(0.0);
        tr.wprime.push_back(0.0);
        tr.phi.push_back(0.0);
        tr.phiprime.push_back(0.0);
        tr.h.push_back(0.0);
    }
    return tr;
}

} // namespace

TEST_CASE("phi and its derivative") {
    for (double m : {0.1, 0.2, 0.6}) {
        CHECK(phi_of(m, 0.0) == 0.0);
        for (double z : {-0.9, -0.3, -1e-2, -1e-4, -1e-7, 1e-7, 1e-4, 1e-2, 0.5, 3.0}) {
            const long double direct = std::pow(1.0L + z, 1.0L / m) - 1.0L - z / static_cast<long double>(m);
            CHECK(phi_of(m, z) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-6));
            CHECK(phi_of(m, z) > 0.0);
            const double h = 1e-6 * std::max(std::abs(z), 1e-3);
            const double fd = (phi_of(m, z + h) - phi_of(m, z - h)) / (2.0 * h);
            CHECK(phi_prime_of(m, z) == doctest::Approx(fd).epsilon(1e-5));
        }
        // Quadratic bracket near zero, from phi''(0)/2 = (1-m)/(2 m^2).
        const double c = (1.0 - m) / (2.0 * m * m);
        for (double z = -0.1; z <= 0.1; z += 0.005) {
            if (z != 0.0 && std::abs(z) > 1e-12) {
                const double ratio = phi_of(m, z) / (z * z);
                CHECK(ratio > 0.75 * c * 0.5);
                CHECK(ratio < 1.25 * c * 2.0);
            }
        }
    }
}

TEST_CASE("log trace of the Barenblatt profile") {
    const ParamSet p = derive_params(3, 0.2, 2.5);
    const Profile prof = solve_profile(p, 1.0);
    const WTrace tr = to_log_trace(prof);
    CHECK(tr.s.size() == prof.size() - 1);
    for (std::size_t k = 0; k < tr.s.size(); ++k) {
        const double r = std::exp(tr.s[k]);
        // g = (r^2 / (C* + r^2))^{m/(1-m)} in closed form.
        const double exact = std::pow(r * r / (0.2 + r * r), 0.25);
        CHECK(tr.g[k] == doctest::Approx(exact).epsilon(1e-8));
        CHECK(tr.g[k] > 0.0);
        CHECK(tr.w[k] + 1.0 == doctest::Approx(tr.g[k]).epsilon(1e-14));
        CHECK(tr.phi[k] >= 0.0);
    }
    const auto at_one = std::min_element(tr.s.begin(), tr.s.end(), [](double a, double b) {
        return std::abs(a) < std::abs(b);
    });
    const std::size_t k0 = static_cast<std::size_t>(at_one - tr.s.begin());
    CHECK(tr.s[k0] == doctest::Approx(0.0).scale(1.0));
    CHECK(tr.g[k0] == doctest::Approx(std::pow(1.0 / 1.2, 0.25)).epsilon(1e-8));
    CHECK(tr.g[k0] == doctest::Approx(0.955443).epsilon(1e-5));
    CHECK(tr.g.front() < 1e-10);
}

TEST_CASE("trace range and sign in the monotone case") {
    const ParamSet p = derive_params(3, 0.2, 3.0);
    const Profile prof = solve_profile(p, 1.0);
    const WTrace tr = to_log_trace(prof);
    CHECK(std::abs(tr.w.back()) < 1e-2);
    for (std::size_t k = 0; k < tr.s.size(); ++k) {
        CHECK(tr.w[k] < 0.0);
    }

    GridSpec small;
    small.r_max = 100.0;
    CHECK_THROWS_AS((void)to_log_trace(solve_profile(p, 1.0, small)), InsufficientRange);
}

TEST_CASE("w stays within a multiple of exp(-gamma_1 s)") {
    const ParamSet p = derive_params(3, 0.2, 3.0);
    const WTrace tr = to_log_trace(deep_profile(3.0, 1.0));
    double bound = 0.0;
    for (std::size_t k = 0; k < tr.s.size(); ++k) {
        if (tr.s[k] > 0.0 && std::abs(tr.w[k]) > 1e-9) {
            bound = std::max(bound, std::abs(tr.w[k]) * std::exp(*p.gamma_1 * tr.s[k]));
        }
    }
    CHECK(bound > 0.0);
    CHECK(bound < 1.0);
}

TEST_CASE("Barenblatt second-order coefficient") {
    const ParamSet p = derive_params(3, 0.2, 2.5);
    const Regime reg = classify(p);
    // (C*/(k^2 + r^2))^{1/(1-m)} = C(r) (1 + k^2/r^2)^{-1/(1-m)}, so w ~ -(m/(1-m)) k^2 r^{-2},
    // i.e. B_lambda = k^2/(1-m) with k^2 = C*/lambda^2.
    for (double lambda : {0.5, 1.0, 2.0}) {
        const double oracle = 0.2 / (lambda * lambda) / 0.8;
        const AsymptoticFit fit = fit_second_order(to_log_trace(deep_profile(2.5, lambda)), p, reg);
        CHECK(fit.gamma_used == 2.0);
        CHECK(std::abs(fit.b_lambda / oracle - 1.0) < 0.01);
        CHECK(fit.b_lambda * lambda * lambda == doctest::Approx(0.25).epsilon(0.01));
        CHECK(fit.residual < 0.05);
        CHECK(fit.points >= 8);
        CHECK(fit.i2.has_value());
    }
}

TEST_CASE("fits in the monotone and non-monotone cases") {
    for (double beta : {3.0, 2.2}) {
        const ParamSet p = derive_params(3, 0.2, beta);
        const Regime reg = classify(p);
        double first = 0.0;
        for (double lambda : {0.5, 1.0, 2.0}) {
            const WTrace tr = to_log_trace(deep_profile(beta, lambda));
            const AsymptoticFit fit = fit_second_order(tr, p, reg);
            CHECK(std::abs(-fit.slope / *p.gamma_1 - 1.0) < 0.05);
            CHECK(fit.b_lambda > 0.0);
            for (std::size_t k = 0; k < tr.s.size(); ++k) {
                if (tr.s[k] >= fit.s_lo && tr.s[k] <= fit.s_hi) {
                    CHECK((reg.non_monotone() ? tr.w[k] > 0.0 : tr.w[k] < 0.0));
                }
            }
            const double collapse = fit.b_lambda * std::pow(lambda, fit.gamma_used);
            if (first == 0.0) {
                first = collapse;
            }
            CHECK(std::abs(collapse / first - 1.0) < 0.02);
        }
    }
}

TEST_CASE("sign and slope checks reject inconsistent traces") {
    const ParamSet p = derive_params(3, 0.2, 3.0);
    const Regime reg = classify(p);
    WTrace flipped = to_log_trace(deep_profile(3.0, 1.0));
    for (double& w : flipped.w) {
        w = -w;
    }
    CHECK_THROWS_AS((void)fit_second_order(flipped, p, reg), SignMismatch);

    WTrace steep = zero_trace(600);
    for (std::size_t k = 0; k < steep.s.size(); ++k) {
        steep.s[k] = 0.1 * static_cast<double>(k);
        steep.w[k] = -1e-2 * std::exp(-0.8 * steep.s[k]);
    }
    CHECK_THROWS_AS((void)fit_second_order(steep, p, reg), SlopeMismatch);

    CHECK_THROWS_AS((void)fit_second_order(flipped, derive_params(3, 0.2, 1.5), Regime{}), UnsupportedRegime);
}

TEST_CASE("integral identities") {
    const ParamSet c1 = derive_params(3, 0.2, 3.0);
    CHECK(verify_integral_identity(to_log_trace(deep_profile(3.0, 1.0)), c1) < 1e-3);
    const ParamSet c3 = derive_params(3, 0.2, 2.5);
    CHECK(verify_integral_identity(to_log_trace(deep_profile(2.5, 1.0)), c3) < 1e-4);
    const ParamSet c2 = derive_params(3, 0.2, 2.2);
    CHECK(verify_integral_identity(to_log_trace(deep_profile(2.2, 1.0)), c2) < 1e-3);

    CHECK(verify_integral_identity(zero_trace(100), c1) == 0.0);

    GridSpec shallow;
    shallow.r_max = 1e24;
    shallow.r_floor = 1e-3;
    CHECK_THROWS_AS((void)verify_integral_identity(to_log_trace(solve_profile(c1, 1.0, shallow)), c1),
                    InsufficientRange);
}

TEST_CASE("limit laws") {
    const ParamSet c1 = derive_params(3, 0.2, 3.0);
    const LimitPair l1 = compute_limits(to_log_trace(deep_profile(3.0, 1.0)), c1);
    CHECK(l1.lim1 < 0.0);
    CHECK(l1.gap < 0.05);

    const ParamSet c3 = derive_params(3, 0.2, 2.5);
    const LimitPair l3 = compute_limits(to_log_trace(deep_profile(2.5, 1.0)), c3);
    CHECK(l3.lim2 < 0.0);
    CHECK(l3.gap < 0.05);
    // e^{2s} w tends to -m B_1 = -0.2 * 0.25.
    CHECK(l3.lim1 == doctest::Approx(-0.05).epsilon(1e-3));

    const LimitPair zero = compute_limits(zero_trace(100), c1);
    CHECK(zero.lim1 == 0.0);
    CHECK(zero.lim2 == 0.0);
    CHECK(zero.gap == 0.0);
}

TEST_CASE("running weighted integral on an exact exponential") {
    // phi = e^{-t} on a uniform grid: the integral of e^{gamma t} phi is closed-form.
    WTrace tr = zero_trace(2001);
    const double gamma = 0.5;
    for (std::size_t k = 0; k < tr.s.size(); ++k) {
        tr.s[k] = 0.01 * static_cast<double>(k);
        tr.phi[k] = std::exp(-tr.s[k]);
        tr.phiprime[k] = -tr.phi[k];
    }
    const auto J = weighted_phi_integral(tr, gamma);
    const double head = 1.0 / gamma;
    for (std::size_t k = 0; k < J.size(); k += 250) {
        const double exact = head + (1.0 - std::exp((gamma - 1.0) * tr.s[k])) / (1.0 - gamma);
        CHECK(J[k] == doctest::Approx(exact).epsilon(1e-9));
    }
}
