#pragma once

#include <cmath>
#include <numbers>

namespace selfselect::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

inline double pdf(double z) { return std::exp(log_pdf(z)); }

inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// log Phi(z), accurate in the far left tail where Phi underflows.
inline double log_cdf(double z) {
    if (z > -30.0) return std::log(cdf(z));
    // Mills-ratio asymptotic series: Phi(z) ~ phi(z)/|z| (1 - 1/z^2 + 3/z^4 - 15/z^6)
    double z2 = z * z;
    double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return log_pdf(z) - std::log(-z) + std::log(series);
}

/// Inverse Mills ratio phi(z)/Phi(z).
inline double inverse_mills(double z) { return std::exp(log_pdf(z) - log_cdf(z)); }

/// (l-1)!! for even l, the l-th moment of a standard normal.
inline double double_factorial_odd(int l) {
    double r = 1.0;
    for (int i = l - 1; i > 1; i -= 2) r *= i;
    return r;
}

}  // namespace selfselect::normal
