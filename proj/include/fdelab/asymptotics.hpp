#pragma once

#include "fdelab/profile.hpp"
#include "fdelab/regimes.hpp"

#include <optional>
#include <vector>

namespace fdelab {

/// A profile rewritten in s = log r.
///
/// g = [C*^{-1/(1-m)} e^{2s/(1-m)} f]^m, w = g - 1, phi = (1+w)^{1/m} - 1 - w/m,
/// h = -C*(beta phi' + phi/(1-m)). Derivatives in s are carried alongside.
struct WTrace {
    std::vector<double> s;
    std::vector<double> g;
    std::vector<double> w;
    std::vector<double> wprime;
    std::vector<double> phi;
    std::vector<double> phiprime;
    std::vector<double> h;
};

struct AsymptoticFit {
    double gamma_used = 0.0;
    double b_lambda = 0.0;
    double slope = 0.0;     ///< least-squares slope of log|w| against s
    double s_lo = 0.0;
    double s_hi = 0.0;
    double residual = 0.0;  ///< max relative deviation of the exponential fit
    std::size_t points = 0;
    double i1 = 0.0;
    std::optional<double> i2; ///< only when the integral converges
};

struct LimitPair {
    double lim1 = 0.0; ///< extrapolated e^{gamma s} w
    double lim2 = 0.0; ///< the integral expression it should equal
    double gap = 0.0;  ///< |lim1 - lim2| / max(|lim1|, |lim2|)
};

/// The window bounds on |w| used by every fit.
inline constexpr double kWindowUpper = 1e-3;
inline constexpr double kWindowLower = 1e-8;

/// phi(z) = (1+z)^{1/m} - 1 - z/m, accurate for tiny z.
[[nodiscard]] double phi_of(double m, double z);
/// phi'(z) = ((1+z)^{1/m-1} - 1)/m.
[[nodiscard]] double phi_prime_of(double m, double z);

/// Log-variable trace of `prof` over its positive radii.
/// InsufficientRange when the profile stops below r = 1e3.
[[nodiscard]] WTrace to_log_trace(const Profile& prof);

/// Node indices [lo, hi) where kWindowLower < |w| < kWindowUpper in the tail.
[[nodiscard]] std::pair<std::size_t, std::size_t> fit_window(const WTrace& tr);

[[nodiscard]] AsymptoticFit fit_second_order(const WTrace& tr, const ParamSet& p, const Regime& reg);

/// Max normalized residual of both integral identities over the upper half of the fit window.
[[nodiscard]] double verify_integral_identity(const WTrace& tr, const ParamSet& p);

[[nodiscard]] LimitPair compute_limits(const WTrace& tr, const ParamSet& p);

/// Running integral J(s_k) = int_{-inf}^{s_k} e^{gamma t} phi(t) dt on the trace grid.
[[nodiscard]] std::vector<double> weighted_phi_integral(const WTrace& tr, double gamma);

} // namespace fdelab
