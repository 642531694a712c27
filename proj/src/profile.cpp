#include "fdelab/profile.hpp"

#include "fdelab/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace fdelab {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

constexpr int kMaxStepsBetweenOutputs = 2'000'000;

// Integrates `system` from t0 through the sorted targets (all >= t0) and hands
// each target's state to `sink(index, state)`.
template <class System, class Sink>
void integrate_to(System system, State x0, double t0, std::span<const double> targets, double dt0,
                  double atol, double rtol, Sink sink) {
    std::vector<double> times{t0};
    std::vector<std::size_t> index;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] <= t0) {
            sink(k, x0);
        } else {
            times.push_back(targets[k]);
            index.push_back(k);
        }
    }
    if (times.size() < 2) {
        return;
    }
    auto stepper = odeint::make_dense_output(atol, rtol, odeint::runge_kutta_dopri5<State>());
    std::size_t seen = 0;
    auto observer = [&](const State& x, double) {
        if (seen > 0) {
            sink(index[seen - 1], x);
        }
        ++seen;
    };
    try {
        odeint::integrate_times(stepper, system, x0, times.begin(), times.end(), dt0, observer,
                                odeint::max_step_checker(kMaxStepsBetweenOutputs));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw IntegrationFailure(std::string("profile integration failed: ") + e.what());
    }
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw PositivityLoss(std::string(what) + " left the positive range during integration");
    }
}

} // namespace

void GridSpec::validate() const {
    auto bad = [](const std::string& msg) { throw DomainError("invalid grid spec: " + msg); };
    if (!(r_inner > 0.0) || !(r_inner < 1.0)) bad("r_inner must lie in (0, 1)");
    if (!(r_max >= 1.0) || !std::isfinite(r_max)) bad("r_max must be finite and at least 1");
    if (!(r_inner < r_max)) bad("r_inner must be below r_max");
    if (nodes_per_decade < 4) bad("nodes_per_decade must be at least 4");
    if (!(r_floor > 0.0) || !(r_floor < r_max)) bad("r_floor must lie in (0, r_max)");
    if (!(r_switch >= r_inner)) bad("r_switch must not be below r_inner");
    if (!(rtol > 0.0) || !(atol > 0.0)) bad("tolerances must be positive");
}

Profile::Profile(ParamSet params, double lambda, std::vector<double> r, std::vector<double> f,
                 std::vector<double> fprime, double tol)
    : params_(params), lambda_(lambda), r_(std::move(r)), f_(std::move(f)), fp_(std::move(fprime)), tol_(tol) {
    if (r_.size() < 3 || f_.size() != r_.size() || fp_.size() != r_.size()) {
        throw GridMismatch("a profile needs at least three nodes and matching arrays");
    }
    if (r_.front() != 0.0) {
        throw GridMismatch("a profile grid must start at r = 0");
    }
    for (std::size_t k = 0; k + 1 < r_.size(); ++k) {
        if (!(r_[k + 1] > r_[k])) {
            throw GridMismatch("profile radii must be strictly increasing");
        }
    }
    for (double v : f_) {
        require_positive(v, "profile value");
    }
    core_ = MonotoneHermite({r_[0], r_[1]}, {f_[0], f_[1]}, {fp_[0], fp_[1]});
    std::vector<double> lx, ly, ld;
    lx.reserve(r_.size() - 1);
    ly.reserve(r_.size() - 1);
    ld.reserve(r_.size() - 1);
    for (std::size_t k = 1; k < r_.size(); ++k) {
        lx.push_back(std::log(r_[k]));
        ly.push_back(std::log(f_[k]));
        ld.push_back(r_[k] * fp_[k] / f_[k]);
    }
    outer_ = MonotoneHermite(std::move(lx), std::move(ly), std::move(ld));
}

double Profile::evaluate(double x) const {
    if (!(x >= 0.0) || x > r_.back()) {
        std::ostringstream os;
        os << "radius " << x << " outside the profile range [0, " << r_.back() << "]";
        throw OutOfRange(os.str());
    }
    auto it = std::lower_bound(r_.begin(), r_.end(), x);
    if (it != r_.end() && *it == x) {
        return f_[static_cast<std::size_t>(it - r_.begin())];
    }
    if (x <= r_[1]) {
        return core_(x);
    }
    return std::exp(outer_(std::log(x)));
}

double singular_profile(const ParamSet& p, double r) {
    if (!(r > 0.0)) {
        throw DomainError("the singular profile is only defined for r > 0");
    }
    return std::pow(p.c_star / (r * r), 1.0 / (1.0 - p.m));
}

double barenblatt_profile(const ParamSet& p, double lambda, double r) {
    if (!p.at_beta_1()) {
        throw WrongBetaError("the closed-form profile exists only at beta = beta_1");
    }
    const double k2 = p.c_star / (lambda * lambda);
    return std::pow(p.c_star / (k2 + r * r), 1.0 / (1.0 - p.m));
}

double barenblatt_derivative(const ParamSet& p, double lambda, double r) {
    const double f = barenblatt_profile(p, lambda, r);
    const double k2 = p.c_star / (lambda * lambda);
    return -2.0 * r / (1.0 - p.m) * f / (k2 + r * r);
}

std::vector<double> default_radii(const GridSpec& spec) {
    spec.validate();
    std::vector<double> r{0.0};
    const double lo = std::log10(spec.r_floor);
    const double hi = std::log10(spec.r_max);
    const auto count = static_cast<long>(std::ceil((hi - lo) * spec.nodes_per_decade - 1e-9));
    for (long k = 0; k < count; ++k) {
        r.push_back(std::pow(10.0, lo + static_cast<double>(k) / spec.nodes_per_decade));
    }
    r.push_back(spec.r_max);
    return r;
}

Profile solve_profile(const ParamSet& p, double lambda, const GridSpec& spec) {
    const auto radii = default_radii(spec);
    return solve_profile_at(p, lambda, spec, radii);
}

Profile solve_profile_at(const ParamSet& p, double lambda, const GridSpec& spec, std::span<const double> radii) {
    spec.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError("lambda must be positive and finite");
    }
    if (p.beta < p.beta_e) {
        throw SubcriticalBetaError("profiles need beta >= beta_e");
    }
    if (radii.size() < 3 || radii.front() != 0.0) {
        throw GridMismatch("output radii must start at 0 and hold at least three nodes");
    }

    const int n = p.n;
    const double m = p.m;
    const double alpha = p.alpha;
    const double beta = p.beta;
    const double f0 = std::pow(lambda, p.height_exponent());
    const double eps = spec.r_inner / lambda;
    const double r_end = radii.back();
    const double r_sw = std::min(spec.r_switch / lambda, r_end);
    const double curv = alpha * std::pow(f0, 2.0 - m) / (2.0 * m * n);

    const std::size_t N = radii.size();
    std::vector<double> f(N), fp(N);
    f[0] = f0;
    fp[0] = 0.0;

    // Split the output nodes into series, r-phase and s-phase ranges.
    std::size_t a = 1;
    while (a < N && radii[a] <= eps) {
        f[a] = f0 - curv * radii[a] * radii[a];
        fp[a] = -2.0 * curv * radii[a];
        ++a;
    }
    std::size_t b = a;
    while (b < N && radii[b] <= r_sw) {
        ++b;
    }

    // r-phase: state (f, F') with F = f^m.
    auto rhs_r = [&](const State& x, State& dx, double r) {
        require_positive(x[0], "f");
        const double fpr = x[1] * std::pow(x[0], 1.0 - m) / m;
        dx[0] = fpr;
        dx[1] = -(n - 1.0) / r * x[1] - alpha * x[0] - beta * r * fpr;
    };
    const State start{f0 - curv * eps * eps, -alpha * f0 / n * eps};
    std::vector<double> r_targets(radii.begin() + static_cast<long>(a), radii.begin() + static_cast<long>(b));
    r_targets.push_back(r_sw);
    State handoff = start;
    integrate_to(rhs_r, start, eps, r_targets, 1e-3 * eps, spec.atol, spec.rtol,
                 [&](std::size_t k, const State& x) {
                     if (k + 1 == r_targets.size()) {
                         handoff = x;
                         return;
                     }
                     require_positive(x[0], "f");
                     f[a + k] = x[0];
                     fp[a + k] = x[1] * std::pow(x[0], 1.0 - m) / m;
                 });

    if (b < N) {
        // s-phase: state (w, w') with s = log r and w = g - 1.
        const double cs = p.c_star;
        const double lin = (n - 2.0 - (n + 2.0) * m) / (1.0 - m);
        const double drag = beta * cs / m;
        const double restore = 2.0 * m * p.eta() / ((1.0 - m) * (1.0 - m));
        auto rhs_s = [&](const State& x, State& dx, double) {
            require_positive(1.0 + x[0], "g");
            const double l1p = std::log1p(x[0]);
            const double pow_inv = std::expm1(l1p / m);       // (1+w)^{1/m} - 1
            const double pow_drag = std::exp(l1p * (1.0 / m - 1.0));
            dx[0] = x[1];
            dx[1] = -(lin + drag * pow_drag) * x[1] - restore * (pow_inv - x[0]);
        };
        const double fh = handoff[0];
        require_positive(fh, "f");
        const double fph = handoff[1] * std::pow(fh, 1.0 - m) / m;
        const double log_cs = std::log(cs);
        const double w0 = std::expm1(m * (std::log(fh) + (2.0 * std::log(r_sw) - log_cs) / (1.0 - m)));
        const double v0 = (1.0 + w0) * (2.0 * m / (1.0 - m) + m * r_sw * fph / fh);
        std::vector<double> s_targets;
        s_targets.reserve(N - b);
        for (std::size_t k = b; k < N; ++k) {
            s_targets.push_back(std::log(radii[k]));
        }
        const double prefactor = std::pow(cs, 1.0 / (1.0 - m));
        integrate_to(rhs_s, State{w0, v0}, std::log(r_sw), s_targets, 1e-3, spec.atol * 1e-12, spec.rtol,
                     [&](std::size_t k, const State& x) {
                         require_positive(1.0 + x[0], "g");
                         const double r = radii[b + k];
                         const double fv = prefactor * std::pow(r, -2.0 / (1.0 - m)) *
                                           std::exp(std::log1p(x[0]) / m);
                         f[b + k] = fv;
                         fp[b + k] = fv / r * (x[1] / (m * (1.0 + x[0])) - 2.0 / (1.0 - m));
                     });
    }

    Profile prof(p, lambda, std::vector<double>(radii.begin(), radii.end()), std::move(f), std::move(fp),
                 spec.rtol);
    const auto bad = profile_invariant_violations(prof);
    if (!bad.empty()) {
        throw IntegrationFailure("solved profile violates an invariant: " + bad.front());
    }
    return prof;
}

Profile rescale_profile(const Profile& base, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError("lambda must be positive and finite");
    }
    const double mu = lambda / base.lambda();
    const double h = base.params().height_exponent();
    const double fs = std::pow(mu, h);
    const double ds = fs * mu;
    std::vector<double> r(base.r().begin(), base.r().end());
    std::vector<double> f(base.f().begin(), base.f().end());
    std::vector<double> fp(base.fprime().begin(), base.fprime().end());
    for (std::size_t k = 0; k < r.size(); ++k) {
        r[k] /= mu;
        f[k] *= fs;
        fp[k] *= ds;
    }
    // Keep the exact initial height rather than a rounded product.
    f[0] = std::pow(lambda, h);
    return Profile(base.params(), lambda, std::move(r), std::move(f), std::move(fp), base.tol());
}

std::vector<std::string> profile_invariant_violations(const Profile& prof) {
    std::vector<std::string> out;
    const ParamSet& p = prof.params();
    const auto r = prof.r();
    const auto f = prof.f();
    const auto fp = prof.fprime();
    const double f0 = std::pow(prof.lambda(), p.height_exponent());
    if (std::abs(f[0] - f0) > 1e-14 * f0) {
        out.emplace_back("f(0) differs from lambda^{2/(1-m)}");
    }
    if (fp[0] != 0.0) {
        out.emplace_back("f'(0) is not zero");
    }
    double prev_flux = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (!(f[k] > 0.0)) {
            out.push_back("f is not positive at r = " + std::to_string(r[k]));
            break;
        }
        if (k == 0) {
            if (!(p.alpha > 0.0)) {
                out.emplace_back("alpha f + beta r f' is not positive at r = 0");
            }
            continue;
        }
        if (!(fp[k] < 0.0)) {
            out.push_back("f' is not negative at r = " + std::to_string(r[k]));
            break;
        }
        if (!(p.alpha * f[k] + p.beta * r[k] * fp[k] > 0.0)) {
            out.push_back("alpha f + beta r f' is not positive at r = " + std::to_string(r[k]));
            break;
        }
        // r^{n-1}(f^m)' is negative; compare log of its magnitude.
        const double flux = (p.n - 1.0) * std::log(r[k]) + std::log(p.m) + (p.m - 1.0) * std::log(f[k]) +
                            std::log(-fp[k]);
        if (!(flux > prev_flux)) {
            out.push_back("r^{n-1}(f^m)' is not decreasing at r = " + std::to_string(r[k]));
            break;
        }
        prev_flux = flux;
    }
    return out;
}

} // namespace fdelab
