#include "fdelab/asymptotics.hpp"

#include "fdelab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fdelab {

namespace {

struct LineFit {
    double slope;
    double intercept;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

bool identically_zero(const WTrace& tr) {
    return std::all_of(tr.w.begin(), tr.w.end(), [](double v) { return v == 0.0; });
}

Regime supported_regime(const ParamSet& p) {
    Regime reg = classify(p);
    if (!reg.supported()) {
        throw UnsupportedRegime("second-order asymptotics need a C1, C2 or C3 parameter set");
    }
    return reg;
}

// Decay rate of the next-order correction relative to the leading e^{-gamma s} term.
double correction_rate(const ParamSet& p, const Regime& reg) {
    if (reg.barenblatt()) {
        return 2.0;
    }
    return std::min(*p.gamma_1, *p.gamma_2 - *p.gamma_1);
}

// Intercept of e^{gamma s} w regressed on e^{-delta s} over [lo, hi).
double extrapolate_scaled_w(const WTrace& tr, std::size_t lo, std::size_t hi, double gamma, double delta) {
    std::vector<double> x, y;
    x.reserve(hi - lo);
    y.reserve(hi - lo);
    const double s_ref = tr.s[hi - 1];
    for (std::size_t k = lo; k < hi; ++k) {
        x.push_back(std::exp(-delta * (tr.s[k] - s_ref)));
        y.push_back(tr.w[k] * std::exp(gamma * tr.s[k]));
    }
    return least_squares(x, y).intercept;
}

// Integral of e^{gamma t} phi over [s_k, inf) for phi decaying like e^{-2 gamma_w t}.
double upper_tail(const WTrace& tr, std::size_t k, double gamma, double gamma_w) {
    return std::exp(gamma * tr.s[k]) * tr.phi[k] / (2.0 * gamma_w - gamma);
}

} // namespace

double phi_of(double m, double z) {
    if (std::abs(z) < 1e-3) {
        // Binomial series from the quadratic term on.
        const double e = 1.0 / m;
        double coeff = e * (e - 1.0) / 2.0;
        double zk = z * z;
        double sum = 0.0;
        for (int k = 2; k <= 7; ++k) {
            sum += coeff * zk;
            coeff *= (e - k) / (k + 1.0);
            zk *= z;
        }
        return sum;
    }
    return std::expm1(std::log1p(z) / m) - z / m;
}

double phi_prime_of(double m, double z) {
    return std::expm1((1.0 / m - 1.0) * std::log1p(z)) / m;
}

WTrace to_log_trace(const Profile& prof) {
    if (prof.r_max() < 1e3) {
        throw InsufficientRange("the log-variable trace needs a profile resolved to r >= 1e3");
    }
    const ParamSet& p = prof.params();
    const double m = p.m;
    const double log_cs = std::log(p.c_star);
    const auto r = prof.r();
    const auto f = prof.f();
    const auto fp = prof.fprime();
    const std::size_t N = r.size() - 1;

    WTrace tr;
    for (auto* v : {&tr.s, &tr.g, &tr.w, &tr.wprime, &tr.phi, &tr.phiprime, &tr.h}) {
        v->resize(N);
    }
    for (std::size_t k = 0; k < N; ++k) {
        const double rk = r[k + 1];
        const double s = std::log(rk);
        const double w = std::expm1(m * (std::log(f[k + 1]) + (2.0 * s - log_cs) / (1.0 - m)));
        const double g = 1.0 + w;
        const double wp = g * (2.0 * m / (1.0 - m) + m * rk * fp[k + 1] / f[k + 1]);
        tr.s[k] = s;
        tr.g[k] = g;
        tr.w[k] = w;
        tr.wprime[k] = wp;
        tr.phi[k] = phi_of(m, w);
        tr.phiprime[k] = phi_prime_of(m, w) * wp;
        tr.h[k] = -p.c_star * (p.beta * tr.phiprime[k] + tr.phi[k] / (1.0 - m));
    }
    return tr;
}

std::pair<std::size_t, std::size_t> fit_window(const WTrace& tr) {
    const std::size_t N = tr.w.size();
    std::size_t lo = 0;
    for (std::size_t k = 0; k < N; ++k) {
        if (std::abs(tr.w[k]) >= kWindowUpper) {
            lo = k + 1;
        }
    }
    std::size_t hi = lo;
    while (hi < N && std::abs(tr.w[hi]) > kWindowLower) {
        ++hi;
    }
    if (hi < lo + 8 || !(std::abs(tr.w[lo]) >= 10.0 * std::abs(tr.w[hi - 1]))) {
        throw InsufficientRange("the tail where 1e-8 < |w| < 1e-3 is not resolved; raise r_max");
    }
    return {lo, hi};
}

std::vector<double> weighted_phi_integral(const WTrace& tr, double gamma) {
    const std::size_t N = tr.s.size();
    std::vector<double> J(N);
    std::vector<double> y(N), dy(N);
    for (std::size_t k = 0; k < N; ++k) {
        const double e = std::exp(gamma * tr.s[k]);
        y[k] = e * tr.phi[k];
        dy[k] = e * (gamma * tr.phi[k] + tr.phiprime[k]);
    }
    // Below the first node phi is nearly its limit value phi(-1).
    J[0] = y[0] / gamma;
    for (std::size_t k = 1; k < N; ++k) {
        const double h = tr.s[k] - tr.s[k - 1];
        J[k] = J[k - 1] + 0.5 * h * (y[k - 1] + y[k]) + h * h / 12.0 * (dy[k - 1] - dy[k]);
    }
    return J;
}

AsymptoticFit fit_second_order(const WTrace& tr, const ParamSet& p, const Regime& reg) {
    if (!reg.supported()) {
        throw UnsupportedRegime("second-order asymptotics need a C1, C2 or C3 parameter set");
    }
    const double gamma = asymptotic_gamma(p, reg);
    const auto [lo, hi] = fit_window(tr);
    const double expected = reg.non_monotone() ? 1.0 : -1.0;
    for (std::size_t k = lo; k < hi; ++k) {
        if (tr.w[k] * expected <= 0.0) {
            std::ostringstream os;
            os << "w has the wrong sign for regime " << to_string(reg.label) << " at s = " << tr.s[k];
            throw SignMismatch(os.str());
        }
    }

    std::vector<double> x(tr.s.begin() + static_cast<long>(lo), tr.s.begin() + static_cast<long>(hi));
    std::vector<double> y;
    y.reserve(x.size());
    for (std::size_t k = lo; k < hi; ++k) {
        y.push_back(std::log(std::abs(tr.w[k])));
    }
    const LineFit line = least_squares(x, y);
    if (std::abs(-line.slope / gamma - 1.0) > 0.05) {
        std::ostringstream os;
        os << "fitted decay exponent " << -line.slope << " is more than 5% from gamma = " << gamma;
        throw SlopeMismatch(os.str());
    }

    AsymptoticFit fit;
    fit.gamma_used = gamma;
    fit.slope = line.slope;
    fit.s_lo = x.front();
    fit.s_hi = x.back();
    fit.points = x.size();
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double model = line.intercept + line.slope * x[k];
        fit.residual = std::max(fit.residual, std::abs(std::expm1(model - y[k])));
    }
    fit.b_lambda = std::abs(extrapolate_scaled_w(tr, lo, hi, gamma, correction_rate(p, reg))) / p.m;

    // Beyond the window w is at rounding level, so the integrals stop at its end.
    const std::size_t last = hi - 1;
    const auto J1 = weighted_phi_integral(tr, *p.gamma_1);
    fit.i1 = J1[last] + upper_tail(tr, last, *p.gamma_1, gamma);
    if (2.0 * gamma > *p.gamma_2) {
        const auto J2 = weighted_phi_integral(tr, *p.gamma_2);
        fit.i2 = J2[last] + upper_tail(tr, last, *p.gamma_2, gamma);
    }
    return fit;
}

double verify_integral_identity(const WTrace& tr, const ParamSet& p) {
    supported_regime(p);
    if (identically_zero(tr)) {
        return 0.0;
    }
    const double g1 = *p.gamma_1;
    const double g2 = *p.gamma_2;
    const double sup_phi = *std::max_element(tr.phi.begin(), tr.phi.end());
    if (!(std::exp(g1 * tr.s.front()) * sup_phi < 1e-10)) {
        throw InsufficientRange("the trace does not start deep enough to stand in for s -> -infinity");
    }
    const auto [lo, hi] = fit_window(tr);
    const auto J1 = weighted_phi_integral(tr, g1);
    const auto J2 = weighted_phi_integral(tr, g2);
    const double cs = p.c_star;
    double worst = 0.0;
    for (std::size_t k = lo + (hi - lo) / 2; k < hi; ++k) {
        const double s = tr.s[k];
        const double w = tr.w[k];
        const double wp = tr.wprime[k];
        const double drift = cs * p.beta * tr.phi[k];
        const double mem1 = cs * *p.a1 * std::exp(-g1 * s) * J1[k];
        const double mem2 = cs * *p.a2 * std::exp(-g2 * s) * J2[k];
        const double res1 = std::abs(wp + g2 * w + mem1 + drift) /
                            (std::abs(wp) + std::abs(g2 * w) + std::abs(mem1) + std::abs(drift));
        const double res2 = std::abs(wp + g1 * w + mem2 + drift) /
                            (std::abs(wp) + std::abs(g1 * w) + std::abs(mem2) + std::abs(drift));
        worst = std::max({worst, res1, res2});
    }
    return worst;
}

LimitPair compute_limits(const WTrace& tr, const ParamSet& p) {
    const Regime reg = supported_regime(p);
    if (identically_zero(tr)) {
        return {};
    }
    const bool c3 = reg.barenblatt();
    const double gamma = c3 ? *p.gamma_2 : *p.gamma_1;
    const double coeff = c3 ? *p.c0_lin * *p.a2 : -*p.c0_lin * *p.a1;
    const double decay = asymptotic_gamma(p, reg);
    if (!(2.0 * decay > gamma)) {
        throw DivergentIntegral("the weighted integral of phi does not converge for these parameters");
    }

    const auto [lo, hi] = fit_window(tr);
    const std::size_t last = hi - 1;
    const auto J = weighted_phi_integral(tr, gamma);
    const double s_back = tr.s[last] - std::numbers::ln10;
    auto it = std::upper_bound(tr.s.begin(), tr.s.end(), s_back);
    if (it == tr.s.begin()) {
        throw InsufficientRange("the trace spans less than one decade");
    }
    const double earlier = J[static_cast<std::size_t>(it - tr.s.begin()) - 1];
    if (std::abs(J[last] - earlier) > 1e-3 * std::abs(J[last])) {
        throw DivergentIntegral("the truncated integral has not settled to three digits over the last decade");
    }

    LimitPair out;
    out.lim1 = extrapolate_scaled_w(tr, lo, hi, gamma, correction_rate(p, reg));
    out.lim2 = coeff * (J[last] + upper_tail(tr, last, gamma, decay));
    const double scale = std::max(std::abs(out.lim1), std::abs(out.lim2));
    out.gap = scale > 0.0 ? std::abs(out.lim1 - out.lim2) / scale : 0.0;
    return out;
}

} // namespace fdelab
