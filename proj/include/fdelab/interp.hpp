#pragma once

#include <span>
#include <vector>

namespace fdelab {

/// Piecewise cubic Hermite interpolant with caller-supplied node slopes.
///
/// Slopes outside the Fritsch-Carlson monotonicity region of their interval
/// are limited, so monotone data give a monotone interpolant. Slopes that
/// already lie inside the region (the usual case for exact derivatives of a
/// smooth monotone function) are left untouched, keeping fourth-order accuracy.
class MonotoneHermite {
public:
    MonotoneHermite() = default;
    MonotoneHermite(std::vector<double> x, std::vector<double> y, std::vector<double> slope);

    /// Value at t; t must lie in [x.front(), x.back()].
    [[nodiscard]] double operator()(double t) const;

    [[nodiscard]] bool empty() const noexcept { return x_.empty(); }
    [[nodiscard]] double front() const noexcept { return x_.front(); }
    [[nodiscard]] double back() const noexcept { return x_.back(); }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> d_;
};

/// Values of a PCHIP interpolant through (x, y) at the points `at`.
/// Points outside [x.front(), x.back()] are not allowed.
[[nodiscard]] std::vector<double> pchip_resample(std::span<const double> x, std::span<const double> y,
                                                 std::span<const double> at);

} // namespace fdelab
