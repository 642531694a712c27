#include "fdelab/evolver.hpp"

#include "fdelab/diagnostics.hpp"
#include "fdelab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fdelab {

namespace {

struct Tridiagonal {
    std::vector<double> lower, diag, upper, rhs;
    explicit Tridiagonal(std::size_t size) : lower(size, 0.0), diag(size, 0.0), upper(size, 0.0), rhs(size, 0.0) {}
};

// Thomas algorithm; overwrites the system.
std::vector<double> solve_tridiagonal(Tridiagonal& sys) {
    const std::size_t N = sys.diag.size();
    for (std::size_t i = 1; i < N; ++i) {
        const double piv = sys.diag[i - 1];
        if (!(piv > 0.0) || !std::isfinite(piv)) {
            throw SingularSystem("non-positive pivot in the implicit step");
        }
        const double l = sys.lower[i] / piv;
        sys.diag[i] -= l * sys.upper[i - 1];
        sys.rhs[i] -= l * sys.rhs[i - 1];
    }
    if (!(sys.diag[N - 1] > 0.0) || !std::isfinite(sys.diag[N - 1])) {
        throw SingularSystem("non-positive pivot in the implicit step");
    }
    std::vector<double> x(N);
    x[N - 1] = sys.rhs[N - 1] / sys.diag[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) {
        x[i] = (sys.rhs[i] - sys.upper[i] * x[i + 1]) / sys.diag[i];
    }
    return x;
}

// Solves the step linearized about z; v is the state at the start of the step.
std::vector<double> linearized_solve(const RadialState& st, const std::vector<double>& z, double dtau) {
    const RadialGrid& g = *st.grid;
    const ParamSet& p = st.params;
    const std::size_t N = g.nodes() - 1;
    const auto& v = st.u;
    const double m = p.m;
    const double react = p.alpha - p.n * p.beta;

    std::vector<double> a(N + 1), e(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        const double zm = std::pow(z[i], m);
        a[i] = m * zm / z[i];
        e[i] = (1.0 - m) * zm;
    }

    Tridiagonal sys(N);
    for (std::size_t i = 0; i < N; ++i) {
        sys.diag[i] += g.volume[i] * (1.0 / dtau - react);
        sys.rhs[i] += g.volume[i] * v[i] / dtau;
    }
    for (std::size_t i = 0; i < N; ++i) {
        // Face between nodes i and i+1. Transport is inward, so upwinding takes node i+1.
        const double D = g.conductance[i];
        const double B = p.beta * g.face_power[i];
        // Face value sqrt(u_i u_{i+1}), linearized about z; it is homogeneous, so no constant term.
        const double q = std::sqrt(z[i + 1] / z[i]);
        const bool centred = B * 0.5 * q <= D * a[i];
        const double wl = centred ? 0.5 * q : 0.0;
        const double wr = centred ? 0.5 / q : 1.0;
        const double explicit_part = D * (e[i + 1] - e[i]);

        sys.diag[i] += D * a[i] - B * wl;
        sys.upper[i] += -D * a[i + 1] - B * wr;
        sys.rhs[i] += explicit_part;
        if (i + 1 < N) {
            sys.diag[i + 1] += D * a[i + 1] + B * wr;
            sys.lower[i + 1] += -D * a[i] + B * wl;
            sys.rhs[i + 1] -= explicit_part;
        }
    }
    sys.rhs[N - 1] -= sys.upper[N - 1] * v[N];
    sys.upper[N - 1] = 0.0;

    auto x = solve_tridiagonal(sys);
    x.push_back(v[N]);
    for (std::size_t i = 0; i < N; ++i) {
        if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
            std::ostringstream os;
            os << "node " << i << " (r = " << g.r[i] << ") went non-positive";
            throw NegativeValue(os.str());
        }
    }
    return x;
}

} // namespace

double RadialGrid::min_relative_spacing() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        best = std::min(best, (r[i + 1] - r[i]) / r[i]);
    }
    return best;
}

std::shared_ptr<const RadialGrid> make_grid(int n, double dr, double outer_radius) {
    if (!(dr > 0.0) || dr > 0.5) {
        throw DomainError("grid spacing dr must lie in (0, 0.5]");
    }
    if (!(outer_radius > 1.0) || !std::isfinite(outer_radius)) {
        throw DomainError("outer radius must exceed 1");
    }
    auto g = std::make_shared<RadialGrid>();
    g->n = n;
    const auto M = static_cast<int>(std::lround(1.0 / dr));
    for (int k = 0; k <= M; ++k) {
        g->r.push_back(static_cast<double>(k) / M);
    }
    const auto K = static_cast<int>(std::ceil(std::log(outer_radius) / std::log1p(1.0 / M)));
    const double ratio = std::exp(std::log(outer_radius) / K);
    double r = 1.0;
    for (int j = 1; j < K; ++j) {
        r *= ratio;
        g->r.push_back(r);
    }
    g->r.push_back(outer_radius);

    const std::size_t N = g->r.size() - 1;
    g->face.resize(N);
    g->volume.resize(N);
    g->conductance.resize(N);
    g->face_power.resize(N);
    double inner_pow = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double lo = g->r[i];
        const double hi = g->r[i + 1];
        if (i < static_cast<std::size_t>(M)) {
            g->face[i] = 0.5 * (lo + hi);
            g->conductance[i] = std::pow(g->face[i], n - 1) / (hi - lo);
        } else {
            // Geometric part: faces and differences taken in log r, exact for power laws.
            g->face[i] = std::sqrt(lo * hi);
            g->conductance[i] = std::pow(g->face[i], n - 2) / std::log(hi / lo);
        }
        const double outer_pow = std::pow(g->face[i], n);
        g->face_power[i] = outer_pow;
        g->volume[i] = (outer_pow - inner_pow) / n;
        inner_pow = outer_pow;
    }
    return g;
}

std::vector<double> profile_on_grid(const ParamSet& p, double lambda, const RadialGrid& grid) {
    GridSpec spec;
    spec.r_max = std::max(1.0, grid.outer());
    const Profile prof = solve_profile_at(p, lambda, spec, grid.r);
    return {prof.f().begin(), prof.f().end()};
}

double default_outer_radius(const InitialSpec& spec) {
    switch (spec.kind) {
    case InitialKind::profile_exact: return 50.0 / spec.lambda_0;
    case InitialKind::sandwich_blend: return 50.0 / std::min({spec.lambda_0, spec.lambda_1, spec.lambda_2});
    case InitialKind::min_profiles: return 50.0 / std::min(spec.lambda_1, spec.lambda_2);
    }
    return 50.0;
}

RadialState build_initial(const InitialSpec& spec, const ParamSet& p, std::shared_ptr<const RadialGrid> grid) {
    if (grid->n != p.n) {
        throw GridMismatch("grid dimension differs from the parameter set");
    }
    RadialState st;
    st.params = p;
    st.tau = 0.0;
    const std::size_t N = grid->nodes();
    switch (spec.kind) {
    case InitialKind::profile_exact:
        st.u = profile_on_grid(p, spec.lambda_0, *grid);
        break;
    case InitialKind::sandwich_blend: {
        if (!(spec.lambda_1 < spec.lambda_2) || !(spec.blend_inner < spec.blend_outer)) {
            throw DomainError("sandwich blend needs lambda_1 < lambda_2 and blend_inner < blend_outer");
        }
        const auto lo = profile_on_grid(p, spec.lambda_1, *grid);
        const auto hi = profile_on_grid(p, spec.lambda_2, *grid);
        const auto mid = profile_on_grid(p, spec.lambda_0, *grid);
        st.u.resize(N);
        for (std::size_t i = 0; i < N; ++i) {
            const double t = std::clamp((grid->r[i] - spec.blend_inner) / (spec.blend_outer - spec.blend_inner), 0.0, 1.0);
            const double chi = t * t * (3.0 - 2.0 * t);
            st.u[i] = (1.0 - chi) * 0.5 * (lo[i] + hi[i]) + chi * mid[i];
        }
        for (std::size_t i = 0; i < N; ++i) {
            if (st.u[i] < lo[i] || st.u[i] > hi[i]) {
                std::ostringstream os;
                os << "blended data leaves [f_" << spec.lambda_1 << ", f_" << spec.lambda_2 << "] at r = " << grid->r[i];
                throw BoundViolation(os.str());
            }
        }
        break;
    }
    case InitialKind::min_profiles: {
        const auto a = profile_on_grid(p, spec.lambda_1, *grid);
        const auto b = profile_on_grid(p, spec.lambda_2, *grid);
        st.u.resize(N);
        for (std::size_t i = 0; i < N; ++i) {
            st.u[i] = std::min(a[i], b[i]);
        }
        break;
    }
    }
    st.grid = std::move(grid);
    return st;
}

double max_stable_step(const RadialState& st, double cfl) {
    return cfl * st.grid->min_relative_spacing() / st.params.beta;
}

RadialState step(const RadialState& st, double dtau) {
    if (!(dtau > 0.0)) {
        throw DomainError("time step must be positive");
    }
    const auto first = linearized_solve(st, st.u, dtau);
    RadialState next{st.grid, linearized_solve(st, first, dtau), st.tau + dtau, st.params};
    return next;
}

double advance(RadialState& st, double dtau) {
    constexpr int kMaxHalvings = 20;
    for (int attempt = 0;; ++attempt) {
        try {
            st = step(st, dtau);
            return dtau;
        } catch (const NegativeValue&) {
            if (attempt == kMaxHalvings) {
                throw;
            }
            dtau *= 0.5;
        }
    }
}

EvolutionReport evolve(const RadialState& init, const EvolveOptions& opts) {
    if (!(opts.tau_end > 0.0) || !(opts.sample_every > 0.0)) {
        throw ConfigError("tau_end and sample_every must be positive");
    }
    const RadialGrid& g = *init.grid;
    const ParamSet& p = init.params;
    std::vector<double> ref;
    if (opts.reference) {
        const ParamSet& q = opts.reference->params();
        if (q.n != p.n || q.m != p.m || q.beta != p.beta) {
            throw ConfigError("reference profile parameters differ from the run");
        }
        ref.reserve(g.nodes());
        for (double r : g.r) {
            ref.push_back(opts.reference->evaluate(r));
        }
    } else if (opts.weight_p0) {
        throw ConfigError("a weighted distance needs a reference profile");
    }
    const bool envelope = opts.envelope && classify(p).non_monotone();
    std::optional<ProfileFamily> family;
    if (envelope) {
        family.emplace(opts.envelope->base);
    }
    const double sup_radius = opts.sup_radius.value_or(0.5 * g.outer());

    EvolutionReport rep;
    auto record = [&](const RadialState& st) {
        rep.taus.push_back(st.tau);
        rep.center_value.push_back(st.u.front());
        if (!ref.empty()) {
            rep.sup_dist.emplace_back(sup_distance(g, st.u, ref, sup_radius));
            rep.l1_dist.emplace_back(l1_distance(g, st.u, ref));
        } else {
            rep.sup_dist.emplace_back();
            rep.l1_dist.emplace_back();
        }
        if (!ref.empty() && opts.weight_p0) {
            rep.wl1_dist.emplace_back(weighted_l1_distance(g, st.u, ref, p, *opts.weight_p0));
        } else {
            rep.wl1_dist.emplace_back();
        }
        if (envelope) {
            const auto& env = *opts.envelope;
            rep.lambda_env.emplace_back(lambda_envelope(st, *family, env.lam_lo, env.lam_hi, env.tol).lambda);
        } else {
            rep.lambda_env.emplace_back();
        }
        rep.states.push_back(st);
    };

    double dt_max = max_stable_step(init, opts.cfl);
    if (opts.max_step) {
        dt_max = std::min(dt_max, *opts.max_step);
    }
    RadialState st = init;
    record(st);
    const auto samples = static_cast<long>(std::floor(opts.tau_end / opts.sample_every * (1.0 + 1e-12)));
    std::vector<double> targets;
    for (long k = 1; k <= samples; ++k) {
        targets.push_back(init.tau + static_cast<double>(k) * opts.sample_every);
    }
    if (targets.empty() || targets.back() < init.tau + opts.tau_end * (1.0 - 1e-12)) {
        targets.push_back(init.tau + opts.tau_end);
    }
    for (double target : targets) {
        while (st.tau < target) {
            const double remaining = target - st.tau;
            double dt = std::min(dt_max, remaining);
            // Avoid a sliver step just before the sample time.
            if (remaining > dt && remaining - dt < 1e-3 * dt_max) {
                dt = 0.5 * remaining;
            }
            advance(st, dt);
            ++rep.steps;
            if (std::abs(st.tau - target) <= 1e-12 * std::max(1.0, target)) {
                st.tau = target;
            }
        }
        record(st);
    }
    return rep;
}

Slice reconstruct_original(const RadialState& st, double T) {
    if (!(T > 0.0)) {
        throw DomainError("extinction time must be positive");
    }
    const ParamSet& p = st.params;
    const double rem = T * std::exp(-st.tau); // T - t
    Slice out;
    out.t = T - rem;
    const double xs = std::pow(rem, -p.beta);
    const double us = std::pow(rem, p.alpha);
    out.x.reserve(st.u.size());
    out.u.reserve(st.u.size());
    for (std::size_t i = 0; i < st.u.size(); ++i) {
        out.x.push_back(st.grid->r[i] * xs);
        out.u.push_back(st.u[i] * us);
    }
    return out;
}

} // namespace fdelab
