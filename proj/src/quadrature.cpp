#include "fdelab/quadrature.hpp"

#include "fdelab/errors.hpp"

#include <cmath>
#include <numbers>

namespace fdelab {

double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

double radial_moment(std::span<const double> r, std::span<const double> v, double e) {
    if (r.size() != v.size()) {
        throw GridMismatch("radial_moment: grid and values differ in length");
    }
    if (r.size() < 2) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t start = 0;
    if (r[0] == 0.0) {
        if (!(e > -1.0)) {
            throw DomainError("radial_moment: weight r^e is not integrable at the origin");
        }
        const double r1 = r[1];
        const double p = std::pow(r1, e + 1.0);
        sum += v[0] * p / (e + 1.0) + (v[1] - v[0]) * p / (e + 2.0);
        start = 1;
    }
    double prev = v[start] * std::pow(r[start], e);
    for (std::size_t i = start + 1; i < r.size(); ++i) {
        const double cur = v[i] * std::pow(r[i], e);
        sum += 0.5 * (r[i] - r[i - 1]) * (prev + cur);
        prev = cur;
    }
    return sum;
}

} // namespace fdelab
