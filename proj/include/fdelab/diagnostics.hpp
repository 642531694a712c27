#pragma once

#include "fdelab/evolver.hpp"
#include "fdelab/profile.hpp"

#include <memory>
#include <span>
#include <vector>

namespace fdelab {

// Norms. All of them integrate against omega_{n-1} r^{n-1} dr through radial_moment.

[[nodiscard]] double sup_distance(const RadialGrid& g, std::span<const double> a, std::span<const double> b,
                                  double radius);
[[nodiscard]] double l1_distance(const RadialGrid& g, std::span<const double> a, std::span<const double> b);

/// Integral of |a - b| C^{p0} over the grid, with C the singular profile.
[[nodiscard]] double weighted_l1_distance(std::span<const double> r, std::span<const double> a,
                                          std::span<const double> b, const ParamSet& p, double p0);
[[nodiscard]] double weighted_l1_distance(const RadialGrid& g, std::span<const double> a,
                                          std::span<const double> b, const ParamSet& p, double p0);
[[nodiscard]] double weighted_l1_distance(const RadialState& a, const RadialState& b, double p0);
/// The profile is read at the state's nodes.
[[nodiscard]] double weighted_l1_distance(const RadialState& a, const Profile& b, double p0);

/// f_lambda for every lambda from one base profile by the exact scaling law.
class ProfileFamily {
public:
    explicit ProfileFamily(std::shared_ptr<const Profile> base);

    [[nodiscard]] const ParamSet& params() const noexcept { return base_->params(); }
    /// f_lambda at radius r; OutOfRange when lambda r exceeds the base range.
    [[nodiscard]] double value(double lambda, double r) const;
    [[nodiscard]] std::vector<double> values(double lambda, std::span<const double> r) const;

private:
    std::shared_ptr<const Profile> base_;
    double height_;
};

struct EnvelopeResult {
    double lambda = 0.0;
    std::vector<double> grid;   ///< the scanned lambdas
    std::vector<bool> feasible; ///< u <= f_lambda at every node, per scanned lambda
};

/// Relative slack in the node-wise test u <= f_lambda.
inline constexpr double kFeasibilitySlack = 1e-9;

/// inf { lambda : u <= f_lambda node-wise }, searched in [lam_lo, lam_hi].
[[nodiscard]] EnvelopeResult lambda_envelope(const RadialState& st, const ProfileFamily& family, double lam_lo,
                                             double lam_hi, double tol);

struct ContractionOptions {
    double tau_end = 1.0;
    double sample_every = 0.5;
    double cfl = 0.5;
    std::optional<double> max_step;
};

struct ContractionRecord {
    std::vector<double> taus;
    std::vector<double> wl1_pair_dist;
    std::vector<double> dissipation;
    /// min over nodes of (b - a) at each sample, or of (a - b) when a started above b.
    std::vector<double> order_gap;
    std::vector<RadialState> final_states;
};

/// Evolves a and b in lockstep and records the weighted pair distance and the
/// accumulated dissipation term measured against the upper profile f_{lambda_2}.
/// RegimeError outside C1.
[[nodiscard]] ContractionRecord contraction_monitor(const RadialState& a, const RadialState& b, double lambda_2,
                                                    const ContractionOptions& opts);

struct DecayFit {
    double rate = 0.0; ///< v ~ exp(-rate tau)
    double tau_lo = 0.0;
    double tau_hi = 0.0;
    std::size_t points = 0;
};

/// Least-squares exponential rate of `values` over samples with tau >= tau_min
/// and value >= floor_factor * floor; InsufficientSamples below three points.
[[nodiscard]] DecayFit fit_decay_rate(std::span<const double> taus, std::span<const double> values,
                                      std::span<const double> floor, double tau_min, double floor_factor);

/// Max over nodes and interior samples of (u_t - u/((1-m)t)) / (u/((1-m)t)).
/// Needs three or more slices with 0 < t < T.
[[nodiscard]] double aronson_benilan_check(std::span<const Slice> slices, double T, double m);

} // namespace fdelab
