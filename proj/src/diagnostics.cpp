#include "fdelab/diagnostics.hpp"

#include "fdelab/errors.hpp"
#include "fdelab/interp.hpp"
#include "fdelab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fdelab {

namespace {

void require_same_size(std::size_t a, std::size_t b, std::size_t c) {
    if (a != b || a != c) {
        throw GridMismatch("state and grid sizes differ");
    }
}

void require_weight_exponent(const ParamSet& p, double p0) {
    const double upper = 0.5 * (1.0 - p.m) * (p.n - 2.0);
    if (!(p0 > 0.0) || !(p0 < upper)) {
        std::ostringstream os;
        os << "weight exponent p0 = " << p0 << " outside (0, " << upper << ")";
        throw DomainError(os.str());
    }
}

std::vector<double> abs_diff(std::span<const double> a, std::span<const double> b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = std::abs(a[i] - b[i]);
    }
    return d;
}

// Steps both states with the same dtau, halving on NegativeValue in either.
void advance_pair(RadialState& a, RadialState& b, double dtau) {
    constexpr int kMaxHalvings = 20;
    for (int attempt = 0;; ++attempt) {
        try {
            RadialState na = step(a, dtau);
            RadialState nb = step(b, dtau);
            a = std::move(na);
            b = std::move(nb);
            return;
        } catch (const NegativeValue&) {
            if (attempt == kMaxHalvings) {
                throw;
            }
            dtau *= 0.5;
        }
    }
}

} // namespace

double sup_distance(const RadialGrid& g, std::span<const double> a, std::span<const double> b, double radius) {
    require_same_size(g.nodes(), a.size(), b.size());
    double out = 0.0;
    for (std::size_t i = 0; i < a.size() && g.r[i] <= radius; ++i) {
        out = std::max(out, std::abs(a[i] - b[i]));
    }
    return out;
}

double l1_distance(const RadialGrid& g, std::span<const double> a, std::span<const double> b) {
    require_same_size(g.nodes(), a.size(), b.size());
    return sphere_area(g.n) * radial_moment(g.r, abs_diff(a, b), g.n - 1.0);
}

double weighted_l1_distance(std::span<const double> r, std::span<const double> a, std::span<const double> b,
                            const ParamSet& p, double p0) {
    require_same_size(r.size(), a.size(), b.size());
    require_weight_exponent(p, p0);
    const double k = p0 / (1.0 - p.m);
    return sphere_area(p.n) * std::pow(p.c_star, k) * radial_moment(r, abs_diff(a, b), p.n - 1.0 - 2.0 * k);
}

double weighted_l1_distance(const RadialGrid& g, std::span<const double> a, std::span<const double> b,
                            const ParamSet& p, double p0) {
    return weighted_l1_distance(g.r, a, b, p, p0);
}

double weighted_l1_distance(const RadialState& a, const RadialState& b, double p0) {
    if (a.grid != b.grid && a.grid->r != b.grid->r) {
        throw GridMismatch("states live on different grids");
    }
    return weighted_l1_distance(*a.grid, a.u, b.u, a.params, p0);
}

double weighted_l1_distance(const RadialState& a, const Profile& b, double p0) {
    std::vector<double> fb;
    fb.reserve(a.grid->nodes());
    for (double r : a.grid->r) {
        fb.push_back(b.evaluate(r));
    }
    return weighted_l1_distance(*a.grid, a.u, fb, a.params, p0);
}

ProfileFamily::ProfileFamily(std::shared_ptr<const Profile> base)
    : base_(std::move(base)), height_(base_->params().height_exponent()) {}

double ProfileFamily::value(double lambda, double r) const {
    const double mu = lambda / base_->lambda();
    return std::pow(mu, height_) * base_->evaluate(mu * r);
}

std::vector<double> ProfileFamily::values(double lambda, std::span<const double> r) const {
    std::vector<double> out;
    out.reserve(r.size());
    for (double x : r) {
        out.push_back(value(lambda, x));
    }
    return out;
}

EnvelopeResult lambda_envelope(const RadialState& st, const ProfileFamily& family, double lam_lo, double lam_hi,
                               double tol) {
    if (!(lam_lo > 0.0) || !(lam_lo < lam_hi) || !(tol > 0.0)) {
        throw DomainError("lambda envelope needs 0 < lam_lo < lam_hi and tol > 0");
    }
    const auto& r = st.grid->r;
    auto feasible = [&](double lam) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (st.u[i] > family.value(lam, r[i]) * (1.0 + kFeasibilitySlack)) {
                return false;
            }
        }
        return true;
    };

    constexpr int kScan = 64;
    EnvelopeResult res;
    res.grid.reserve(kScan);
    res.feasible.reserve(kScan);
    const double ratio = std::pow(lam_hi / lam_lo, 1.0 / (kScan - 1));
    for (int k = 0; k < kScan; ++k) {
        const double lam = k + 1 == kScan ? lam_hi : lam_lo * std::pow(ratio, k);
        res.grid.push_back(lam);
        res.feasible.push_back(feasible(lam));
    }
    const auto first = std::find(res.feasible.begin(), res.feasible.end(), true);
    if (first == res.feasible.end()) {
        throw NoFeasibleLambda("no scanned lambda bounds the state from above");
    }
    const auto j = static_cast<std::size_t>(first - res.feasible.begin());
    if (j == 0) {
        res.lambda = lam_lo;
        return res;
    }
    double lo = res.grid[j - 1];
    double hi = res.grid[j];
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    res.lambda = hi;
    return res;
}

ContractionRecord contraction_monitor(const RadialState& a, const RadialState& b, double lambda_2,
                                      const ContractionOptions& opts) {
    const ParamSet& p = a.params;
    if (!classify(p).monotone() || !p.p0 || !p.a_star) {
        throw RegimeError("the weighted contraction monitor applies to C1 only");
    }
    if (a.grid->r != b.grid->r) {
        throw GridMismatch("paired runs must share one grid");
    }
    if (!(opts.tau_end > 0.0) || !(opts.sample_every > 0.0)) {
        throw ConfigError("tau_end and sample_every must be positive");
    }
    const RadialGrid& g = *a.grid;
    const double p0 = *p.p0;
    const double k = p0 / (1.0 - p.m);
    const double weight = sphere_area(p.n) * std::pow(p.c_star, k);
    const auto upper = profile_on_grid(p, lambda_2, g);

    // |(C/f)^{1-m} - 1| C^{p0} r^{n-1} = |C* - r^2 f^{1-m}| / f^{1-m} * C*^{k} r^{n-3-2k}.
    std::vector<double> factor(g.nodes());
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        const double f1m = std::pow(upper[i], 1.0 - p.m);
        factor[i] = std::abs(p.c_star - g.r[i] * g.r[i] * f1m) / f1m;
    }
    const double diss_exponent = p.n - 3.0 - 2.0 * k;
    auto dissipation_rate = [&](const RadialState& x, const RadialState& y) {
        std::vector<double> v(g.nodes());
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = std::abs(x.u[i] - y.u[i]) * factor[i];
        }
        return *p.a_star * weight * radial_moment(g.r, v, diss_exponent);
    };
    const bool a_below = a.u.front() <= b.u.front();
    auto gap = [&](const RadialState& x, const RadialState& y) {
        double out = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.u.size(); ++i) {
            out = std::min(out, a_below ? y.u[i] - x.u[i] : x.u[i] - y.u[i]);
        }
        return out;
    };

    ContractionRecord rec;
    RadialState x = a;
    RadialState y = b;
    double accumulated = 0.0;
    double rate = dissipation_rate(x, y);
    auto record = [&] {
        rec.taus.push_back(x.tau);
        rec.wl1_pair_dist.push_back(weighted_l1_distance(g, x.u, y.u, p, p0));
        rec.dissipation.push_back(accumulated);
        rec.order_gap.push_back(gap(x, y));
    };
    record();

    double dt_max = max_stable_step(x, opts.cfl);
    if (opts.max_step) {
        dt_max = std::min(dt_max, *opts.max_step);
    }
    const auto samples = static_cast<long>(std::floor(opts.tau_end / opts.sample_every * (1.0 + 1e-12)));
    for (long s = 1; s <= samples; ++s) {
        const double target = a.tau + static_cast<double>(s) * opts.sample_every;
        while (x.tau < target) {
            const double remaining = target - x.tau;
            double dt = std::min(dt_max, remaining);
            if (remaining > dt && remaining - dt < 1e-3 * dt_max) {
                dt = 0.5 * remaining;
            }
            const double before = x.tau;
            advance_pair(x, y, dt);
            const double next_rate = dissipation_rate(x, y);
            accumulated += 0.5 * (x.tau - before) * (rate + next_rate);
            rate = next_rate;
            if (std::abs(x.tau - target) <= 1e-12 * std::max(1.0, target)) {
                x.tau = target;
                y.tau = target;
            }
        }
        record();
    }
    rec.final_states = {x, y};
    return rec;
}

DecayFit fit_decay_rate(std::span<const double> taus, std::span<const double> values,
                        std::span<const double> floor, double tau_min, double floor_factor) {
    if (taus.size() != values.size() || taus.size() != floor.size()) {
        throw GridMismatch("decay fit series differ in length");
    }
    std::vector<double> t, y;
    for (std::size_t k = 0; k < taus.size(); ++k) {
        if (taus[k] >= tau_min && values[k] > 0.0 && values[k] >= floor_factor * floor[k]) {
            t.push_back(taus[k]);
            y.push_back(std::log(values[k]));
        }
    }
    if (t.size() < 3) {
        throw InsufficientSamples("fewer than three samples stand clear of the floor");
    }
    const auto n = static_cast<double>(t.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        mt += t[k];
        my += y[k];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        stt += (t[k] - mt) * (t[k] - mt);
        sty += (t[k] - mt) * (y[k] - my);
    }
    DecayFit fit;
    fit.rate = -sty / stt;
    fit.tau_lo = t.front();
    fit.tau_hi = t.back();
    fit.points = t.size();
    return fit;
}

double aronson_benilan_check(std::span<const Slice> slices, double T, double m) {
    if (slices.size() < 3) {
        throw InsufficientSamples("the time-derivative check needs at least three slices");
    }
    for (std::size_t k = 0; k < slices.size(); ++k) {
        if (!(slices[k].t > 0.0) || !(slices[k].t < T)) {
            throw InsufficientSamples("slices must lie strictly inside (0, T)");
        }
        if (k > 0 && !(slices[k].t > slices[k - 1].t)) {
            throw InsufficientSamples("slices must be ordered in time");
        }
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < slices.size(); ++k) {
        const Slice& a = slices[k - 1];
        const Slice& c = slices[k];
        const Slice& b = slices[k + 1];
        const double reach = std::min({a.x.back(), b.x.back(), c.x.back()});
        std::vector<double> xs;
        for (double x : c.x) {
            if (x <= reach) {
                xs.push_back(x);
            }
        }
        const auto ua = pchip_resample(a.x, a.u, xs);
        const auto ub = pchip_resample(b.x, b.u, xs);
        const double h1 = c.t - a.t;
        const double h2 = b.t - c.t;
        const double ca = -h2 / (h1 * (h1 + h2));
        const double cc = (h2 - h1) / (h1 * h2);
        const double cb = h1 / (h2 * (h1 + h2));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double ut = ca * ua[i] + cc * c.u[i] + cb * ub[i];
            const double bound = c.u[i] / ((1.0 - m) * c.t);
            worst = std::max(worst, (ut - bound) / bound);
        }
    }
    return worst;
}

} // namespace fdelab
