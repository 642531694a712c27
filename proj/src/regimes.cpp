#include "fdelab/regimes.hpp"

#include "fdelab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fdelab {

namespace {

bool near(double a, double b) {
    return std::abs(a - b) <= kBoundarySnap * std::max(std::abs(a), std::abs(b));
}

// (n-4)/(n-2); the critical exponent separating C1ii from C2ii/C3ii for n > 4.
double critical_m(int n) {
    return (n - 4.0) / (n - 2.0);
}

} // namespace

ParamSet derive_params(int n, double m, double beta) {
    if (n < 3) {
        throw DomainError("dimension n must be at least 3");
    }
    const double m_max = (n - 2.0) / n;
    if (!(m > 0.0) || !(m < m_max)) {
        std::ostringstream os;
        os << "m = " << m << " is outside the subcritical range (0, " << m_max << ") for n = " << n;
        throw DomainError(os.str());
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw DomainError("beta must be positive and finite");
    }

    ParamSet p;
    p.n = n;
    p.m = m;
    const double eta = n - 2.0 - n * m;
    p.beta_e = m / eta;
    p.beta_1 = 1.0 / eta;
    p.beta_2 = std::sqrt(2.0 * (1.0 - m) / eta) + ((n + 2.0) * m - (n - 2.0)) / (2.0 * eta);
    p.beta_0 = std::max(p.beta_2, p.beta_e);
    p.c_star = 2.0 * m * eta / (1.0 - m);

    if (near(beta, p.beta_1)) {
        beta = p.beta_1;
    }
    if (beta < p.beta_e && !near(beta, p.beta_e)) {
        std::ostringstream os;
        os << "beta = " << beta << " is below beta_e = " << p.beta_e;
        throw SubcriticalBetaError(os.str());
    }
    p.beta = beta;
    p.alpha = (2.0 * beta + 1.0) / (1.0 - m);
    p.a0 = n - 2.0 - (n + 2.0) * m + 2.0 * beta * eta;
    p.decay_rate = n * beta - p.alpha;

    if (p.at_beta_1()) {
        // Roots of the characteristic polynomial at beta_1 are 2 and eta/(1-m).
        const double other = eta / (1.0 - m);
        p.gamma_1 = std::min(2.0, other);
        p.gamma_2 = std::max(2.0, other);
    } else if (beta > p.beta_0) {
        const double disc = p.a0 * p.a0 - 8.0 * eta * (1.0 - m);
        const double root = std::sqrt(std::max(disc, 0.0));
        p.gamma_1 = (p.a0 - root) / (2.0 * (1.0 - m));
        p.gamma_2 = (p.a0 + root) / (2.0 * (1.0 - m));
    }

    if (p.gamma_1 && p.gamma_2) {
        p.a1 = 1.0 / (1.0 - m) - beta * *p.gamma_1;
        p.a2 = 1.0 / (1.0 - m) - beta * *p.gamma_2;
        if (*p.gamma_2 > *p.gamma_1) {
            p.c0_lin = p.c_star / (*p.gamma_2 - *p.gamma_1);
        }
    }

    const Regime reg = classify(p);
    if (reg.monotone()) {
        const double tail = n - 2.0 / (1.0 - m) - *p.gamma_1;
        if (tail > 0.0) {
            p.p0 = 0.5 * (1.0 - m) * tail;
            p.a_star = 2.0 * m * *p.p0 / (p.c_star * (1.0 - m)) * (*p.gamma_1 + 2.0 * m / (1.0 - m));
        }
    }
    return p;
}

Regime classify(const ParamSet& p) {
    Regime reg;
    if (!p.gamma_1 || !p.gamma_2 || p.beta < p.beta_e) {
        return reg;
    }
    const int n = p.n;
    const double mc = critical_m(n);
    const bool high_dim = n > 4;
    const bool on_mc = high_dim && near(p.m, mc);
    const bool below_mc = high_dim && !on_mc && p.m < mc;
    const bool above_mc = !high_dim || (!on_mc && p.m > mc);
    const bool on_b1 = p.at_beta_1();
    const bool above_b0 = p.beta > p.beta_0;

    if (p.beta > p.beta_1) {
        reg.label = RegimeLabel::C1i;
    } else if (below_mc && above_b0) {
        reg.label = RegimeLabel::C1ii;
    } else if (above_b0 && !on_b1 && above_mc) {
        reg.label = high_dim ? RegimeLabel::C2ii : RegimeLabel::C2i;
    } else if (on_b1 && above_mc) {
        reg.label = high_dim ? RegimeLabel::C3ii : RegimeLabel::C3i;
    } else {
        return reg;
    }

    if (reg.monotone()) {
        reg.sign_a1 = Sign::positive;
    } else if (reg.non_monotone()) {
        reg.sign_a1 = Sign::negative;
    } else {
        reg.sign_a1 = Sign::zero;
    }

    // The table decides the sign; the computed A_1 must agree with it.
    constexpr double consistency = 1e-9;
    const double a1 = *p.a1;
    const bool consistent = (*reg.sign_a1 == Sign::positive && a1 > -consistency) ||
                            (*reg.sign_a1 == Sign::negative && a1 < consistency) ||
                            (*reg.sign_a1 == Sign::zero && std::abs(a1) <= consistency);
    if (!consistent) {
        std::ostringstream os;
        os << "computed A_1 = " << a1 << " disagrees with regime " << to_string(reg.label);
        throw std::logic_error(os.str());
    }
    return reg;
}

double asymptotic_gamma(const ParamSet& p, const Regime& reg) {
    if (!reg.supported()) {
        throw UnsupportedRegime("no second-order asymptotics outside C1/C2/C3");
    }
    return reg.barenblatt() ? 2.0 : *p.gamma_1;
}

double tail_exponent(const ParamSet& p) {
    const Regime reg = classify(p);
    return p.n - 2.0 / (1.0 - p.m) - asymptotic_gamma(p, reg);
}

std::string_view to_string(RegimeLabel label) noexcept {
    switch (label) {
    case RegimeLabel::C1i: return "C1i";
    case RegimeLabel::C1ii: return "C1ii";
    case RegimeLabel::C2i: return "C2i";
    case RegimeLabel::C2ii: return "C2ii";
    case RegimeLabel::C3i: return "C3i";
    case RegimeLabel::C3ii: return "C3ii";
    case RegimeLabel::Unsupported: return "Unsupported";
    }
    return "Unsupported";
}

std::string_view to_string(Sign sign) noexcept {
    switch (sign) {
    case Sign::negative: return "negative";
    case Sign::zero: return "zero";
    case Sign::positive: return "positive";
    }
    return "zero";
}

} // namespace fdelab
