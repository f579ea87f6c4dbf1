#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace palmmark {

namespace detail {

// P(a, x) by its power series; converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the modified Lentz continued fraction; used for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-17) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized upper incomplete gamma function Q(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0) || !(x >= 0)) {
        throw std::domain_error("gamma_q requires a > 0 and x >= 0");
    }
    if (x == 0) {
        return 1.0;
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    if (x < a + 1.0) {
        return 1.0 - detail::gamma_p_series(a, x);
    }
    return detail::gamma_q_continued_fraction(a, x);
}

/// P(χ²_dof > x).
inline double chi2_sf(double x, int dof) {
    if (dof < 1) {
        throw std::domain_error("chi-square degrees of freedom must be positive");
    }
    if (!(x >= 0)) {
        throw std::domain_error("chi2_sf requires x >= 0");
    }
    return gamma_q(0.5 * dof, 0.5 * x);
}

inline double chi2_pdf(double x, int dof) {
    if (x <= 0) {
        return dof == 2 ? 0.5 : 0.0;
    }
    const double k = 0.5 * dof;
    return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

/// x with P(χ²_dof <= x) = prob: bracketing bisection, then Newton steps kept inside the bracket.
inline double chi2_quantile(int dof, double prob) {
    if (!(prob > 0 && prob < 1)) {
        throw std::domain_error("chi2_quantile requires 0 < prob < 1");
    }
    const double target = 1.0 - prob;
    double lo = 0.0;
    double hi = std::max(1.0, double(dof));
    while (chi2_sf(hi, dof) > target) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (chi2_sf(mid, dof) > target ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double pdf = chi2_pdf(x, dof);
        if (!(pdf > 0)) {
            break;
        }
        const double next = x + (chi2_sf(x, dof) - target) / pdf;
        if (!(next >= lo && next <= hi)) {
            break;
        }
        x = next;
    }
    return x;
}

}  // namespace palmmark
