#include <doctest.h>

#include "fdelab/diagnostics.hpp"
#include "fdelab/errors.hpp"

#include <cmath>
#include <numbers>

using namespace fdelab;

namespace {

std::shared_ptr<const Profile> base_profile(double beta, double r_max) {
    GridSpec spec;
    spec.r_max = r_max;
    return std::make_shared<const Profile>(solve_profile(derive_params(3, 0.2, beta), 1.0, spec));
}

} // namespace

TEST_CASE("unweighted norms") {
    const auto g = make_grid(3, 0.01, 10.0);
    const std::vector<double> zero(g->nodes(), 0.0);
    const std::vector<double> one(g->nodes(), 1.0);
    std::vector<double> ramp(g->nodes());
    for (std::size_t i = 0; i < ramp.size(); ++i) {
        ramp[i] = g->r[i];
    }
    // 4 pi R^3 / 3 and 4 pi R^4 / 4 for the constant and the identity, up to O(dr^2).
    CHECK(l1_distance(*g, one, zero) == doctest::Approx(4.0 * std::numbers::pi * 1000.0 / 3.0).epsilon(1e-4));
    CHECK(l1_distance(*g, ramp, zero) == doctest::Approx(std::numbers::pi * 1e4).epsilon(1e-4));
    CHECK(l1_distance(*g, one, one) == 0.0);
    CHECK(sup_distance(*g, ramp, zero, 5.0) == doctest::Approx(5.0).epsilon(0.01));
    CHECK(sup_distance(*g, ramp, zero, 5.0) <= 5.0);
    CHECK(sup_distance(*g, ramp, zero, 100.0) == 10.0);
    const std::vector<double> short_vec(3, 0.0);
    CHECK_THROWS_AS((void)l1_distance(*g, one, short_vec), GridMismatch);
}

TEST_CASE("weighted distance") {
    const ParamSet p = derive_params(3, 0.2, 3.0);
    const double p0 = *p.p0;
    const auto g = make_grid(3, 0.01, 50.0);
    const auto f1 = profile_on_grid(p, 1.0, *g);
    const auto f2 = profile_on_grid(p, 1.25, *g);

    CHECK(weighted_l1_distance(*g, f1, f1, p, p0) == 0.0);
    const double d = weighted_l1_distance(*g, f1, f2, p, p0);
    CHECK(d > 0.0);
    CHECK(weighted_l1_distance(*g, f2, f1, p, p0) == d);
    std::vector<double> twice(f2.size());
    for (std::size_t i = 0; i < f2.size(); ++i) {
        twice[i] = f1[i] + 2.0 * (f2[i] - f1[i]);
    }
    CHECK(weighted_l1_distance(*g, f1, twice, p, p0) == doctest::Approx(2.0 * d).epsilon(1e-13));

    const double upper = 0.5 * 0.8 * 1.0;
    CHECK_THROWS_AS((void)weighted_l1_distance(*g, f1, f2, p, 0.0), DomainError);
    CHECK_THROWS_AS((void)weighted_l1_distance(*g, f1, f2, p, upper), DomainError);
    const std::vector<double> short_vec(3, 0.0);
    CHECK_THROWS_AS((void)weighted_l1_distance(*g, f1, short_vec, p, p0), GridMismatch);

    const RadialState a{g, f1, 0.0, p};
    const RadialState b{g, f2, 0.0, p};
    CHECK(weighted_l1_distance(a, b, p0) == d);
    const auto other = make_grid(3, 0.02, 50.0);
    const RadialState c{other, profile_on_grid(p, 1.0, *other), 0.0, p};
    CHECK_THROWS_AS((void)weighted_l1_distance(a, c, p0), GridMismatch);

    GridSpec gs;
    gs.r_max = 100.0;
    const Profile prof = solve_profile(p, 1.25, gs);
    CHECK(weighted_l1_distance(a, prof, p0) == doctest::Approx(d).epsilon(1e-6));
}

TEST_CASE("weighted distance of two profiles grows like log R") {
    // |f1 - f2| C^{p0} r^{n-1} ~ r^{-1} at the critical weight of the monotone case.
    const ParamSet p = derive_params(3, 0.2, 3.0);
    const auto base = base_profile(3.0, 1e7);
    const ProfileFamily fam(base);
    std::vector<double> r{0.0};
    for (double x = 1e-3; x <= 1e6; x *= 1.02) {
        r.push_back(x);
    }
    const auto f1 = fam.values(1.0, r);
    const auto f2 = fam.values(2.0, r);
    auto truncated = [&](double R) {
        std::size_t k = 0;
        while (k < r.size() && r[k] <= R) {
            ++k;
        }
        const std::span<const double> rs(r.data(), k);
        return weighted_l1_distance(rs, std::span(f1.data(), k), std::span(f2.data(), k), p, *p.p0);
    };
    const double d3 = truncated(1e3) - truncated(1e2);
    const double d4 = truncated(1e4) - truncated(1e3);
    const double d5 = truncated(1e5) - truncated(1e4);
    CHECK(d3 > 0.0);
    CHECK(d4 / d3 == doctest::Approx(1.0).epsilon(0.05));
    CHECK(d5 / d4 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("profile family") {
    const auto base = base_profile(2.5, 1e4);
    const ProfileFamily fam(base);
    const ParamSet& p = fam.params();
    for (double lambda : {0.5, 1.0, 2.0}) {
        for (double r : {0.0, 0.3, 2.0, 40.0}) {
            CHECK(fam.value(lambda, r) == doctest::Approx(barenblatt_profile(p, lambda, r)).epsilon(1e-8));
        }
    }
    CHECK_THROWS_AS((void)fam.value(2.0, 9e3), OutOfRange);
}

TEST_CASE("lambda envelope") {
    const auto g = make_grid(3, 0.02, 50.0);
    {
        // Ordered family: the envelope of f_{1.3} is 1.3 itself.
        const ParamSet c1 = derive_params(3, 0.2, 3.0);
        const ProfileFamily ordered(base_profile(3.0, 1e6));
        const RadialState exact{g, profile_on_grid(c1, 1.3, *g), 0.0, c1};
        const EnvelopeResult env = lambda_envelope(exact, ordered, 0.05, 4.0, 1e-8);
        CHECK(env.lambda == doctest::Approx(1.3).epsilon(1e-6));
        CHECK(env.grid.size() == env.feasible.size());
        CHECK(env.grid.front() == 0.05);
        CHECK(env.grid.back() == 4.0);
        CHECK_FALSE(env.feasible.front());
        CHECK(env.feasible.back());
    }

    const ParamSet p = derive_params(3, 0.2, 2.2);
    const ProfileFamily fam(base_profile(2.2, 1e6));
    const RadialState exact{g, profile_on_grid(p, 1.3, *g), 0.0, p};

    const auto f1 = profile_on_grid(p, 1.0, *g);
    const auto f2 = profile_on_grid(p, 2.0, *g);
    std::vector<double> mn(f1.size());
    for (std::size_t i = 0; i < mn.size(); ++i) {
        mn[i] = std::min(f1[i], f2[i]);
    }
    const RadialState low{g, mn, 0.0, p};
    const double lam = lambda_envelope(low, fam, 0.05, 4.0, 1e-8).lambda;
    CHECK(lam == doctest::Approx(1.0).epsilon(1e-6));
    // The bound is sharp: slightly smaller lambdas fail somewhere.
    const auto below = fam.values(lam * (1.0 - 1e-4), g->r);
    bool exceeds = false;
    for (std::size_t i = 0; i < mn.size(); ++i) {
        exceeds = exceeds || mn[i] > below[i];
    }
    CHECK(exceeds);

    std::vector<double> high(f1.size());
    for (std::size_t i = 0; i < high.size(); ++i) {
        high[i] = f1[i] * (1.0 + 1.0 / (1.0 + g->r[i]));
    }
    const RadialState above{g, high, 0.0, p};
    CHECK_THROWS_AS((void)lambda_envelope(above, fam, 0.5, 0.9, 1e-6), NoFeasibleLambda);
    CHECK_THROWS_AS((void)lambda_envelope(exact, fam, 2.0, 1.0, 1e-6), DomainError);
}

TEST_CASE("contraction monitor") {
    const ParamSet c1 = derive_params(3, 0.2, 3.0);
    const auto g = make_grid(3, 0.02, 40.0);
    InitialSpec mid;
    const RadialState a = build_initial(mid, c1, g);

    ContractionOptions opts;
    opts.tau_end = 0.5;
    opts.sample_every = 0.25;

    const ContractionRecord same = contraction_monitor(a, a, 1.25, opts);
    for (std::size_t k = 0; k < same.taus.size(); ++k) {
        CHECK(same.wl1_pair_dist[k] == 0.0);
        CHECK(same.dissipation[k] == 0.0);
        CHECK(same.order_gap[k] == 0.0);
    }

    InitialSpec blend;
    blend.kind = InitialKind::sandwich_blend;
    blend.lambda_1 = 0.8;
    blend.lambda_2 = 1.25;
    const RadialState c = build_initial(blend, c1, g);
    const ContractionRecord rec = contraction_monitor(c, a, 1.25, opts);
    REQUIRE(rec.taus.size() == 3);
    CHECK(rec.dissipation.front() == 0.0);
    for (std::size_t k = 1; k < rec.taus.size(); ++k) {
        CHECK(rec.wl1_pair_dist[k] < rec.wl1_pair_dist[k - 1]);
        CHECK(rec.dissipation[k] > rec.dissipation[k - 1]);
        const double budget = rec.wl1_pair_dist[0] - rec.wl1_pair_dist[k];
        CHECK(budget >= rec.dissipation[k] * (1.0 - 1e-2));
    }
    CHECK(rec.final_states.size() == 2);
    CHECK(rec.final_states[0].tau == doctest::Approx(0.5));

    const ParamSet c2 = derive_params(3, 0.2, 2.2);
    const RadialState d = build_initial(mid, c2, g);
    CHECK_THROWS_AS((void)contraction_monitor(d, d, 1.25, opts), RegimeError);
}

TEST_CASE("decay rate fit") {
    std::vector<double> t, v, floor;
    for (int k = 0; k <= 40; ++k) {
        t.push_back(0.5 * k);
        v.push_back(3.0 * std::exp(-0.25 * t.back()) + 1e-6);
        floor.push_back(1e-6);
    }
    const DecayFit fit = fit_decay_rate(t, v, floor, 1.0, 10.0);
    CHECK(fit.rate == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(fit.tau_lo == 1.0);
    CHECK(fit.tau_hi == 20.0);
    CHECK(fit.points == 39);

    const DecayFit clipped = fit_decay_rate(t, v, floor, 1.0, 1e5);
    CHECK(clipped.tau_hi < 20.0);
    CHECK(clipped.rate == doctest::Approx(0.25).epsilon(1e-3));

    CHECK_THROWS_AS((void)fit_decay_rate(t, v, floor, 19.5, 10.0), InsufficientSamples);
    const std::vector<double> shorter(t.begin(), t.end() - 1);
    CHECK_THROWS_AS((void)fit_decay_rate(shorter, v, floor, 1.0, 10.0), GridMismatch);
}

TEST_CASE("time-derivative lower bound") {
    // A time-independent solution has u_t = 0, so the normalised excess is exactly -1.
    std::vector<Slice> flat;
    for (double t : {0.2, 0.4, 0.6}) {
        flat.push_back({t, {0.0, 1.0, 2.0, 3.0, 4.0}, {5.0, 4.0, 3.0, 2.0, 1.0}});
    }
    CHECK(aronson_benilan_check(flat, 1.0, 0.2) == doctest::Approx(-1.0).epsilon(1e-14));

    // Slices of the Barenblatt solution in original variables.
    const ParamSet p = derive_params(3, 0.2, 2.5);
    RadialState st = build_initial(InitialSpec{}, p, make_grid(3, 0.02, 50.0));
    std::vector<Slice> slices;
    for (double tau : {0.1, 0.2, 0.3, 0.4, 0.6, 0.9}) {
        st.tau = tau;
        slices.push_back(reconstruct_original(st, 1.0));
    }
    const double worst = aronson_benilan_check(slices, 1.0, 0.2);
    CHECK(worst < 0.0);

    const std::vector<Slice> two(slices.begin(), slices.begin() + 2);
    CHECK_THROWS_AS((void)aronson_benilan_check(two, 1.0, 0.2), InsufficientSamples);
    std::vector<Slice> unordered = slices;
    std::swap(unordered[0], unordered[1]);
    CHECK_THROWS_AS((void)aronson_benilan_check(unordered, 1.0, 0.2), InsufficientSamples);
    CHECK_THROWS_AS((void)aronson_benilan_check(slices, 0.5, 0.2), InsufficientSamples);
}
