#pragma once

#include "fdelab/profile.hpp"
#include "fdelab/regimes.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace fdelab {

/// Node-centred finite-volume geometry on [0, R].
///
/// Nodes are uniform with spacing `dr` on [0, 1] and geometric with ratio
/// close to 1 + dr beyond, ending exactly at R. Cell i spans the midpoints
/// to its neighbours; the last node carries a Dirichlet value.
struct RadialGrid {
    int n = 3;
    std::vector<double> r;      ///< nodes r_0 = 0 < ... < r_N = R
    std::vector<double> face;   ///< arithmetic midpoint on [0, 1], geometric mean beyond
    std::vector<double> volume; ///< |cell i| / omega_{n-1}, i < N
    std::vector<double> conductance; ///< face^{n-1} / (r_{i+1} - r_i) on [0, 1], face^{n-2} / log(r_{i+1} / r_i) beyond
    std::vector<double> face_power;  ///< face^n

    [[nodiscard]] std::size_t nodes() const noexcept { return r.size(); }
    [[nodiscard]] double outer() const noexcept { return r.back(); }
    /// min over r > 0 of (r_{i+1} - r_i) / r_i, the step scale for the advection bound.
    [[nodiscard]] double min_relative_spacing() const;
};

[[nodiscard]] std::shared_ptr<const RadialGrid> make_grid(int n, double dr, double outer_radius);

struct RadialState {
    std::shared_ptr<const RadialGrid> grid;
    std::vector<double> u;
    double tau = 0.0;
    ParamSet params;
};

enum class InitialKind { profile_exact, sandwich_blend, min_profiles };

/// Inputs for `build_initial`. Which lambdas are read depends on the kind:
/// profile_exact uses lambda_0; sandwich_blend uses lambda_1 < lambda_0 < lambda_2;
/// min_profiles uses lambda_1 and lambda_2.
struct InitialSpec {
    InitialKind kind = InitialKind::profile_exact;
    double lambda_0 = 1.0;
    double lambda_1 = 1.0;
    double lambda_2 = 1.0;
    double blend_inner = 2.0; ///< blend is the endpoint average inside this radius
    double blend_outer = 3.0; ///< and f_{lambda_0} beyond this one
};

/// Profile values at the grid nodes, from a solve on exactly those radii.
[[nodiscard]] std::vector<double> profile_on_grid(const ParamSet& p, double lambda, const RadialGrid& grid);

[[nodiscard]] RadialState build_initial(const InitialSpec& spec, const ParamSet& p,
                                        std::shared_ptr<const RadialGrid> grid);

/// Domain radius 50 / lambda_min for the lambdas the initial data touches.
[[nodiscard]] double default_outer_radius(const InitialSpec& spec);

/// Largest step allowed by the advection bound at the given CFL number.
[[nodiscard]] double max_stable_step(const RadialState& st, double cfl = 0.5);

/// One linearly implicit step; throws NegativeValue or SingularSystem.
[[nodiscard]] RadialState step(const RadialState& st, double dtau);

/// Step with retries: halves dtau on NegativeValue up to 20 times.
/// Returns the step size that succeeded.
double advance(RadialState& st, double dtau);

struct EnvelopeSpec {
    std::shared_ptr<const Profile> base; ///< family generator, any lambda, large r_max
    double lam_lo = 0.05;
    double lam_hi = 4.0;
    double tol = 1e-6;
};

struct EvolveOptions {
    double tau_end = 1.0;
    double sample_every = 0.5;
    double cfl = 0.5;
    std::optional<double> max_step;            ///< optional cap below the CFL bound
    std::shared_ptr<const Profile> reference;  ///< distances are measured to this profile
    std::optional<double> weight_p0;
    std::optional<double> sup_radius;          ///< defaults to R / 2
    std::optional<EnvelopeSpec> envelope;
};

struct EvolutionReport {
    std::vector<double> taus;
    std::vector<std::optional<double>> sup_dist;
    std::vector<std::optional<double>> l1_dist;
    std::vector<std::optional<double>> wl1_dist;
    std::vector<double> center_value;
    std::vector<std::optional<double>> lambda_env;
    std::vector<RadialState> states; ///< the sampled states, starting with the initial one
    std::size_t steps = 0;
};

[[nodiscard]] EvolutionReport evolve(const RadialState& init, const EvolveOptions& opts);

/// One time slice of the original-variable solution.
struct Slice {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> u;
};

/// u(x, t) = (T-t)^alpha u~((T-t)^beta |x|, tau) with t = T(1 - e^{-tau}).
[[nodiscard]] Slice reconstruct_original(const RadialState& st, double T);

} // namespace fdelab
