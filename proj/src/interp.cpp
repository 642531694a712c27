#include "fdelab/interp.hpp"

#include "fdelab/errors.hpp"

// pchip.hpp calls isnan unqualified; the global declaration must be visible first.
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdelab {

MonotoneHermite::MonotoneHermite(std::vector<double> x, std::vector<double> y, std::vector<double> slope)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(slope)) {
    if (x_.size() < 2 || y_.size() != x_.size() || d_.size() != x_.size()) {
        throw std::invalid_argument("MonotoneHermite needs at least two nodes and matching arrays");
    }
    for (std::size_t k = 0; k + 1 < x_.size(); ++k) {
        if (!(x_[k + 1] > x_[k])) {
            throw std::invalid_argument("MonotoneHermite nodes must be strictly increasing");
        }
        const double delta = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);
        if (delta == 0.0) {
            d_[k] = 0.0;
            d_[k + 1] = 0.0;
            continue;
        }
        double a = d_[k] / delta;
        double b = d_[k + 1] / delta;
        if (a < 0.0) {
            d_[k] = 0.0;
            a = 0.0;
        }
        if (b < 0.0) {
            d_[k + 1] = 0.0;
            b = 0.0;
        }
        const double r2 = a * a + b * b;
        if (r2 > 9.0) {
            const double tau = 3.0 / std::sqrt(r2);
            d_[k] = tau * a * delta;
            d_[k + 1] = tau * b * delta;
        }
    }
}

double MonotoneHermite::operator()(double t) const {
    if (t < x_.front() || t > x_.back()) {
        throw OutOfRange("interpolation point outside the node range");
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (k + 1 >= x_.size()) {
        return y_.back();
    }
    const double h = x_[k + 1] - x_[k];
    const double u = (t - x_[k]) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
}

std::vector<double> pchip_resample(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> at) {
    if (x.size() != y.size() || x.size() < 4) {
        throw std::invalid_argument("pchip_resample needs at least four matching nodes");
    }
    using boost::math::interpolators::pchip;
    auto interp = pchip(std::vector<double>(x.begin(), x.end()), std::vector<double>(y.begin(), y.end()));
    std::vector<double> out;
    out.reserve(at.size());
    for (double t : at) {
        if (t < x.front() || t > x.back()) {
            throw OutOfRange("resample point outside the node range");
        }
        out.push_back(interp(t));
    }
    return out;
}

} // namespace fdelab
