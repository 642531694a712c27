#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fdelab {

/// Every closed-form constant attached to a (n, m, beta) triple.
///
/// Optional fields are absent when the defining formula does not apply:
/// the characteristic roots need a non-negative discriminant (beta > beta_0,
/// or beta = beta_1), and the weight exponent p0 only exists in the
/// monotone regime with a positive tail exponent.
struct ParamSet {
    int n = 3;
    double m = 0.0;
    double beta = 0.0;

    double alpha = 0.0;  ///< (2 beta + 1) / (1 - m)
    double c_star = 0.0; ///< 2m(n - 2 - nm) / (1 - m)
    double beta_e = 0.0;
    double beta_1 = 0.0;
    double beta_2 = 0.0;
    double beta_0 = 0.0;
    double a0 = 0.0;

    std::optional<double> gamma_1;
    std::optional<double> gamma_2;
    std::optional<double> a1;
    std::optional<double> a2;
    std::optional<double> c0_lin; ///< C* / (gamma_2 - gamma_1)

    std::optional<double> p0;
    std::optional<double> a_star;

    double decay_rate = 0.0; ///< n beta - alpha

    /// n - 2 - nm, positive throughout the subcritical range.
    [[nodiscard]] double eta() const noexcept { return n - 2.0 - n * m; }
    /// True when beta was recognised as beta_1 (and snapped to it).
    [[nodiscard]] bool at_beta_1() const noexcept { return beta == beta_1; }
    /// Exponent 2/(1-m) relating f(0) and lambda.
    [[nodiscard]] double height_exponent() const noexcept { return 2.0 / (1.0 - m); }
};

enum class RegimeLabel { C1i, C1ii, C2i, C2ii, C3i, C3ii, Unsupported };
enum class Sign { negative, zero, positive };

struct Regime {
    RegimeLabel label = RegimeLabel::Unsupported;
    std::optional<Sign> sign_a1;

    [[nodiscard]] bool monotone() const noexcept {
        return label == RegimeLabel::C1i || label == RegimeLabel::C1ii;
    }
    [[nodiscard]] bool non_monotone() const noexcept {
        return label == RegimeLabel::C2i || label == RegimeLabel::C2ii;
    }
    [[nodiscard]] bool barenblatt() const noexcept {
        return label == RegimeLabel::C3i || label == RegimeLabel::C3ii;
    }
    [[nodiscard]] bool supported() const noexcept { return label != RegimeLabel::Unsupported; }
};

/// Relative tolerance used to recognise the exact boundaries beta = beta_1
/// and m = (n-4)/(n-2).
inline constexpr double kBoundarySnap = 1e-12;

[[nodiscard]] ParamSet derive_params(int n, double m, double beta);
[[nodiscard]] Regime classify(const ParamSet& p);

/// n - 2/(1-m) - gamma. Non-negative means f_l1 - f_l2 is not integrable.
[[nodiscard]] double tail_exponent(const ParamSet& p);

/// The decay exponent gamma of the second-order term (gamma_1, or 2 in C3).
[[nodiscard]] double asymptotic_gamma(const ParamSet& p, const Regime& reg);

[[nodiscard]] std::string_view to_string(RegimeLabel label) noexcept;
[[nodiscard]] std::string_view to_string(Sign sign) noexcept;

} // namespace fdelab
