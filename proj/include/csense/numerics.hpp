#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "errors.hpp"

namespace csense {

/// Shared stopping rule for the iterative scalar routines below.
struct Tolerance {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_iter = 100;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol >= 0.0) || max_iter < 1)
            throw std::invalid_argument("Tolerance: need abs_tol > 0, rel_tol >= 0, max_iter >= 1");
    }
};

namespace detail {

/// Series for W_{-1} around the branch point z = -1/e in s = sqrt(2 (1 + e z)):
/// W_{-1} = -1 - s - s^2/3 - 11 s^3/72 - 43 s^4/540 - 769 s^5/17280 + O(s^6).
inline double wm1_branch_series(double s) {
    return -1.0 +
           s * (-1.0 +
                s * (-1.0 / 3.0 +
                     s * (-11.0 / 72.0 + s * (-43.0 / 540.0 + s * (-769.0 / 17280.0)))));
}

} // namespace detail

/// W_{-1}(-e^{-u}) for u >= 1, solved in log form (x + ln(-x) + u = 0) so it
/// stays exact long after -e^{-u} itself would underflow to -0 (u ~ 745).
/// This is the parametrization the periodic-interval closed form needs, where
/// u - 1 is a product of a rate and a cost ratio and can reach ~10^5.
inline double lambert_w_m1_negexp(double u, Tolerance tol = {}) {
    tol.validate();
    if (std::isnan(u) || u < 1.0 - 1e-9)
        throw std::domain_error("lambert_w_m1_negexp: require u >= 1");
    if (u < 1.0) u = 1.0;

    // Distance from the branch point: s^2 = 2 (1 - e^{1-u}), cancellation-free.
    const double s2 = -2.0 * std::expm1(1.0 - u);
    const double s = std::sqrt(s2 > 0.0 ? s2 : 0.0);
    if (s == 0.0) return -1.0;
    if (s < 1e-5) return detail::wm1_branch_series(s); // series already at double precision

    if (s < 0.5) {
        // Near the branch point Newton on the log form degenerates (g' -> 0),
        // so polish the series with Fritsch's quartic iteration on x e^x = z.
        double x = detail::wm1_branch_series(s);
        for (int i = 0; i < tol.max_iter; ++i) {
            const double zn = -(x + std::log(-x) + u); // ln(z / x) - x
            const double q = 2.0 * (1.0 + x) * (1.0 + x + (2.0 / 3.0) * zn);
            const double den = (1.0 + x) * (q - 2.0 * zn);
            if (den == 0.0 || !std::isfinite(den)) break;
            const double eps = zn / (1.0 + x) * (q - zn) / (q - 2.0 * zn);
            x *= 1.0 + eps;
            if (std::abs(eps) <= tol.rel_tol) return x;
        }
        throw ConvergenceError("lambert_w_m1_negexp: Fritsch iteration did not converge");
    }

    // Away from the branch point: Newton on g(x) = x + ln(-x) + u, which is
    // increasing and concave on x < -1; g'(x) = 1 + 1/x is well away from 0.
    double x = (u < 2.5) ? detail::wm1_branch_series(s) : -u - std::log(u);
    if (x >= -1.0) x = -1.0 - s;
    for (int i = 0; i < tol.max_iter; ++i) {
        const double g = x + std::log(-x) + u;
        const double dx = g / (1.0 + 1.0 / x);
        double next = x - dx;
        if (next >= -1.0) next = 0.5 * (x - 1.0); // overshoot guard: bisect toward -1
        const double moved = std::abs(next - x);
        x = next;
        if (moved <= tol.abs_tol + tol.rel_tol * std::abs(x)) return x;
    }
    throw ConvergenceError("lambert_w_m1_negexp: Newton iteration did not converge");
}

/// Lower real branch of the Lambert W function on [-1/e, 0): the x <= -1
/// solving x e^x = z. Exactly -1 at the branch point z = -1/e.
inline double lambert_w_m1(double z, Tolerance tol = {}) {
    // -(double)exp(-1) rounds a hair below the true -1/e; accept it and a
    // small further slack so callers that compute -exp(-1) land in-domain.
    const double neg_inv_e = -0.36787944117144233;
    if (std::isnan(z) || z >= 0.0 || z < neg_inv_e * (1.0 + 1e-13))
        throw std::domain_error("lambert_w_m1: argument outside [-1/e, 0)");
    if (z <= neg_inv_e) return -1.0;
    return lambert_w_m1_negexp(-std::log(-z), tol);
}

/// Standard normal density.
inline double normal_pdf(double x) {
    return 0.3989422804014327 * std::exp(-0.5 * x * x); // 1/sqrt(2 pi)
}

/// Standard normal tail probability P(Z > x), accurate into the deep tail.
inline double q_function(double x) { return 0.5 * std::erfc(x * 0.7071067811865476); }

/// Inverse of q_function on (0,1): rational initial guess (Acklam's
/// approximation for the normal quantile) refined with two Newton steps
/// against q_function itself.
inline double q_inverse(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw std::domain_error("q_inverse: probability must lie strictly inside (0,1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    // Acklam inverts the CDF, and Q(x) = p means CDF(x) = 1 - p. His lower
    // region (pc small, x very negative) yields the quantile directly; his
    // upper region (p small, x very positive) is the lower formula negated.
    const double pc = 1.0 - p;
    double x;
    if (pc < p_low) {
        const double q = std::sqrt(-2.0 * std::log(pc));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (pc <= 1.0 - p_low) {
        const double q = pc - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    for (int i = 0; i < 2; ++i) {
        const double pdf = normal_pdf(x);
        if (!(pdf > 1e-300)) break; // too deep in the tail for a useful correction
        x += (q_function(x) - p) / pdf;
    }
    return x;
}

/// Result of a grid minimization.
struct GridMin {
    double argmin;
    double value;
};

/// Exhaustive scan of f over the grid {lo, lo+step, ...} up to hi; hi itself
/// is always evaluated even when the stepped grid stops short of it. Ties are
/// broken toward the smaller argument. NaN values of f never win.
template <class F>
GridMin minimize_scalar(F&& f, double lo, double hi, double step) {
    if (!(lo < hi) || !(step > 0.0))
        throw std::invalid_argument("minimize_scalar: require lo < hi and step > 0");

    const auto n = static_cast<std::uint64_t>(std::floor((hi - lo) / step * (1.0 + 1e-12)));
    double best_x = lo;
    double best_f = std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 0; k <= n; ++k) {
        const double x = lo + static_cast<double>(k) * step;
        const double fx = f(x);
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    const double top = lo + static_cast<double>(n) * step;
    if (top < hi - 1e-9 * step) {
        const double fx = f(hi);
        if (fx < best_f) {
            best_f = fx;
            best_x = hi;
        }
    }
    return {best_x, best_f};
}

/// Composite Simpson quadrature with n subintervals (bumped to even). For
/// semi-infinite integrands the caller picks the truncation point.
template <class F>
double integrate(F&& f, double lo, double hi, std::uint64_t n) {
    if (!(lo <= hi) || n < 1) throw std::invalid_argument("integrate: require lo <= hi, n >= 1");
    if (lo == hi) return 0.0;
    if (n % 2 != 0) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    double sum = f(lo) + f(hi);
    double four = 0.0;
    double two = 0.0;
    for (std::uint64_t k = 1; k < n; ++k) {
        const double x = lo + static_cast<double>(k) * h;
        if (k % 2 == 1)
            four += f(x);
        else
            two += f(x);
    }
    return (sum + 4.0 * four + 2.0 * two) * h / 3.0;
}

} // namespace csense
