#pragma once

#include "fdelab/interp.hpp"
#include "fdelab/regimes.hpp"

#include <span>
#include <string>
#include <vector>

namespace fdelab {

/// Resolution and tolerance controls for a profile solve.
///
/// Radii `r_inner` and `r_switch` are given for lambda = 1 and divided by
/// lambda at solve time, so a family of profiles shares one spec.
struct GridSpec {
    double r_inner = 1e-4;   ///< series-start radius
    double r_max = 1e3;      ///< last output radius
    int nodes_per_decade = 64;
    double r_floor = 1e-30;  ///< smallest positive node of the default output grid
    double r_switch = 1.0;   ///< radius where integration moves to s = log r
    double rtol = 1e-10;
    double atol = 1e-13;

    /// Throws DomainError unless 0 < r_inner < 1 <= r_max and the rest is sane.
    void validate() const;
};

/// A solved radial profile f on a grid starting at r = 0.
///
/// Immutable once built. `evaluate` interpolates between nodes with a
/// monotone cubic and returns stored values exactly at nodes.
class Profile {
public:
    Profile(ParamSet params, double lambda, std::vector<double> r, std::vector<double> f,
            std::vector<double> fprime, double tol);

    [[nodiscard]] const ParamSet& params() const noexcept { return params_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] double tol() const noexcept { return tol_; }
    [[nodiscard]] std::span<const double> r() const noexcept { return r_; }
    [[nodiscard]] std::span<const double> f() const noexcept { return f_; }
    [[nodiscard]] std::span<const double> fprime() const noexcept { return fp_; }
    [[nodiscard]] std::size_t size() const noexcept { return r_.size(); }
    [[nodiscard]] double r_max() const noexcept { return r_.back(); }
    [[nodiscard]] double center() const noexcept { return f_.front(); }

    /// f at radius x in [0, r_max]; throws OutOfRange otherwise.
    [[nodiscard]] double evaluate(double x) const;

private:
    ParamSet params_;
    double lambda_;
    std::vector<double> r_;
    std::vector<double> f_;
    std::vector<double> fp_;
    double tol_;
    MonotoneHermite core_;  // linear variables on [0, r_1]
    MonotoneHermite outer_; // log f against log r beyond r_1
};

/// (C* / r^2)^{1/(1-m)}; DomainError for r <= 0.
[[nodiscard]] double singular_profile(const ParamSet& p, double r);

/// Closed-form profile at beta = beta_1; WrongBetaError otherwise.
[[nodiscard]] double barenblatt_profile(const ParamSet& p, double lambda, double r);

/// Radial derivative of `barenblatt_profile`.
[[nodiscard]] double barenblatt_derivative(const ParamSet& p, double lambda, double r);

/// Default output grid: 0 followed by a log-spaced grid from r_floor to r_max.
[[nodiscard]] std::vector<double> default_radii(const GridSpec& spec);

/// Solve the profile equation with f(0) = lambda^{2/(1-m)} on the default grid.
[[nodiscard]] Profile solve_profile(const ParamSet& p, double lambda, const GridSpec& spec = {});

/// Same solve, reported on caller-chosen radii (strictly increasing, starting at 0).
[[nodiscard]] Profile solve_profile_at(const ParamSet& p, double lambda, const GridSpec& spec,
                                       std::span<const double> radii);

/// Exact rescaling f_lambda(r) = mu^{2/(1-m)} f_base(mu r), mu = lambda / base.lambda().
[[nodiscard]] Profile rescale_profile(const Profile& base, double lambda);

/// Descriptions of every violated profile invariant; empty when all hold.
[[nodiscard]] std::vector<std::string> profile_invariant_violations(const Profile& prof);

} // namespace fdelab
