#pragma once

// Scalar special functions: Bessel J0, the standard normal and Student-t
// distributions, and the chi-square quantile used as the scale-mixing
// variable of the multivariate t integrand.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "fasrsma/errors.hpp"

namespace fasrsma::numerics {

namespace detail {

// Below this magnitude J0 is summed from its power series in extended
// precision; above it the Hankel asymptotic expansion is used. At |x| = 20
// the largest series term is ~1e7 (cancellation stays under 1e-12 in 80-bit
// long double) and the smallest asymptotic term is ~e^-40.
inline constexpr double kBesselSeriesCrossover = 20.0;

inline double bessel_j0_series(double x) {
    const long double q = static_cast<long double>(x) * x / 4.0L;
    long double term = 1.0L;
    long double sum = 1.0L;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<long double>(k) * k);
        sum += term;
        if (std::fabs(term) < 1e-22L * std::max(1.0L, std::fabs(sum))) break;
    }
    return static_cast<double>(sum);
}

inline double bessel_j0_asymptotic(double x) {
    const double z8 = 8.0 * x;
    double p = 1.0;
    double q = 0.0;
    double magnitude = 1.0;
    for (int m = 1; m < 100; ++m) {
        const double next = magnitude * (2.0 * m - 1.0) * (2.0 * m - 1.0) / (m * z8);
        if (next >= magnitude) break;  // series has started to diverge
        magnitude = next;
        // m even (m = 2k): (-1)^k into P; m odd (m = 2k+1): -(-1)^k into Q.
        if (m % 2 == 0) {
            p += ((m / 2) % 2 == 0 ? 1.0 : -1.0) * magnitude;
        } else {
            q += (((m - 1) / 2) % 2 == 0 ? -1.0 : 1.0) * magnitude;
        }
        if (magnitude < 1e-18) break;
    }
    const double chi = x - std::numbers::pi / 4.0;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

// Regularized incomplete beta by the modified Lentz continued fraction.
// Requires x < (a+1)/(a+b+2) for fast convergence.
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// log B(a, b) without the cancellation of lgamma(a) + lgamma(b) - lgamma(a+b)
// when one argument is large.
inline double log_beta(double a, double b) {
    if (a < b) std::swap(a, b);
    if (a > 20.0) {
        return std::lgamma(b) + std::log(boost::math::tgamma_delta_ratio(a, b));
    }
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace detail

/// Cylindrical Bessel function of the first kind, order zero.
inline double bessel_j0(double x) {
    if (!std::isfinite(x)) throw DomainError("bessel_j0: argument must be finite");
    const double ax = std::fabs(x);
    if (ax <= detail::kBesselSeriesCrossover) return detail::bessel_j0_series(ax);
    return detail::bessel_j0_asymptotic(ax);
}

/// Regularized incomplete beta I_x(a, b). `y` must equal 1 - x; passing it
/// separately keeps full relative precision when x is close to one.
inline double incomplete_beta(double a, double b, double x, double y) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete_beta: a and b must be positive");
    if (x < 0.0 || x > 1.0) throw DomainError("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (y == 0.0) return 1.0;
    const double log_x = x > 0.5 ? std::log1p(-y) : std::log(x);
    const double log_y = y > 0.5 ? std::log1p(-x) : std::log(y);
    const double front = std::exp(a * log_x + b * log_y - detail::log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_continued_fraction(b, a, y) / b;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Standard normal quantile, Wichura's AS241 (PPND16). p = 0 and p = 1 map
/// to -inf and +inf.
inline double normal_quantile(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("normal_quantile: p outside [0,1]");
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();

    static constexpr double a[8] = {3.3871328727963666080E0, 1.3314166789178437745E2,
                                    1.9715909503065514427E3, 1.3731693765509461125E4,
                                    4.5921953931549871457E4, 6.7265770927008700853E4,
                                    3.3430575583588128105E4, 2.5090809287301226727E3};
    static constexpr double b[7] = {4.2313330701600911252E1, 6.8718700749205790830E2,
                                    5.3941960214247511077E3, 2.1213794301586595867E4,
                                    3.9307895800092710610E4, 2.8729085735721942674E4,
                                    5.2264952788528545610E3};
    static constexpr double c[8] = {1.42343711074968357734E0, 4.63033784615654529590E0,
                                    5.76949722146069140550E0, 3.64784832476320460504E0,
                                    1.27045825245236838258E0, 2.41780725177450611770E-1,
                                    2.27238449892691845833E-2, 7.74545014278341407640E-4};
    static constexpr double d[7] = {2.05319162663775882187E0, 1.67638483018380384940E0,
                                    6.89767334985100004550E-1, 1.48103976427480074590E-1,
                                    1.51986665636164571966E-2, 5.47593808499534494600E-4,
                                    1.05075007164441684324E-9};
    static constexpr double e[8] = {6.65790464350110377720E0, 5.46378491116411436990E0,
                                    1.78482653991729133580E0, 2.96560571828504891230E-1,
                                    2.65321895265761230930E-2, 1.24266094738807843860E-3,
                                    2.71155556874348757815E-5, 2.01033439929228813265E-7};
    static constexpr double f[7] = {5.99832206555887937690E-1, 1.36929880922735805310E-1,
                                    1.48753612908506148525E-2, 7.86869131145613259100E-4,
                                    1.84631831751005468180E-5, 1.42151175831644588870E-7,
                                    2.04426310338993978564E-15};

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * (((((((a[7] * r + a[6]) * r + a[5]) * r + a[4]) * r + a[3]) * r + a[2]) * r + a[1]) * r + a[0]) /
               (((((((b[6] * r + b[5]) * r + b[4]) * r + b[3]) * r + b[2]) * r + b[1]) * r + b[0]) * r + 1.0);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((c[7] * r + c[6]) * r + c[5]) * r + c[4]) * r + c[3]) * r + c[2]) * r + c[1]) * r + c[0]) /
            (((((((d[6] * r + d[5]) * r + d[4]) * r + d[3]) * r + d[2]) * r + d[1]) * r + d[0]) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((e[7] * r + e[6]) * r + e[5]) * r + e[4]) * r + e[3]) * r + e[2]) * r + e[1]) * r + e[0]) /
            (((((((f[6] * r + f[5]) * r + f[4]) * r + f[3]) * r + f[2]) * r + f[1]) * r + f[0]) * r + 1.0);
    }
    return q < 0.0 ? -x : x;
}

inline double student_t_pdf(double x, double nu) {
    if (!(nu > 0.0)) throw DomainError("student_t_pdf: degrees of freedom must be positive");
    if (std::isinf(x)) return 0.0;
    const double log_norm = -detail::log_beta(0.5 * nu, 0.5) - 0.5 * std::log(nu);
    return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

/// P(T <= x) for T ~ t_nu, through the regularized incomplete beta function.
inline double student_t_cdf(double x, double nu) {
    if (!(nu > 0.0) || std::isnan(nu)) throw DomainError("student_t_cdf: degrees of freedom must be positive");
    if (std::isnan(x)) throw DomainError("student_t_cdf: argument is NaN");
    if (x == 0.0) return 0.5;
    if (std::isinf(x)) return x > 0.0 ? 1.0 : 0.0;
    const double t2 = x * x;
    // P(T > |x|). Always the direct form: 1 - I_z(1/2, nu/2) cancels to zero
    // in the far tail when t^2 < nu.
    const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, nu / (nu + t2), t2 / (nu + t2));
    return x < 0.0 ? tail : 1.0 - tail;
}

/// Inverse of student_t_cdf. p = 0 and p = 1 return -inf and +inf.
///
/// Starts from the better of a Cornish-Fisher expansion and the power-law
/// tail approximation, then runs Newton iterations on the CDF that fall back
/// to bisection whenever a step leaves the current bracket.
inline double student_t_quantile(double p, double nu) {
    if (!(nu > 0.0) || std::isnan(nu)) throw DomainError("student_t_quantile: degrees of freedom must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("student_t_quantile: p outside [0,1]");
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    if (p == 0.5) return 0.0;
    if (nu == 1.0) {
        // tan(pi (p - 1/2)) written as a cotangent of the smaller tail
        return p < 0.5 ? -1.0 / std::tan(std::numbers::pi * p) : 1.0 / std::tan(std::numbers::pi * (1.0 - p));
    }

    // Solve in the lower tail; upper-tail results follow by symmetry.
    const bool upper = p > 0.5;
    const double target = upper ? 1.0 - p : p;
    if (target == 0.0) return upper ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();

    auto miss = [&](double t) {
        const double f = student_t_cdf(t, nu);
        return std::fabs(std::log(std::max(f, 1e-300) / target));
    };

    const double z = normal_quantile(target);
    const double z2 = z * z;
    double guess = z + z * (z2 + 1.0) / (4.0 * nu) +
                   z * ((5.0 * z2 + 16.0) * z2 + 3.0) / (96.0 * nu * nu);
    // F(-t) ~ c nu^((nu-1)/2) t^-nu for large t
    const double log_c = -detail::log_beta(0.5 * nu, 0.5) - 0.5 * std::log(nu);
    const double tail_guess = -std::exp((log_c + 0.5 * (nu - 1.0) * std::log(nu) - std::log(target)) / nu);
    if (!(guess < 0.0) || (std::isfinite(tail_guess) && miss(tail_guess) < miss(guess))) guess = tail_guess;
    if (!std::isfinite(guess) || !(guess < 0.0)) guess = -1.0;

    double lo;
    double hi = 0.0;
    if (student_t_cdf(guess, nu) > target) {
        hi = guess;
        lo = 2.0 * guess;
        while (student_t_cdf(lo, nu) > target) {
            hi = lo;
            lo *= 2.0;
            if (!std::isfinite(lo)) return upper ? -lo : lo;
        }
    } else {
        lo = guess;
    }

    double t = guess;
    for (int it = 0; it < 300; ++it) {
        const double f = student_t_cdf(t, nu);
        const double err = f - target;
        if (std::fabs(err) <= 1e-15 * target) break;
        if (err > 0.0) hi = std::min(hi, t); else lo = std::max(lo, t);
        const double density = student_t_pdf(t, nu);
        double next = density > 0.0 ? t - err / density : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - t) <= 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(t)) {
            t = next;
            break;
        }
        t = next;
    }
    return upper ? -t : t;
}

/// Quantile of the chi-square distribution with `nu` degrees of freedom.
inline double chi_square_quantile(double p, double nu) {
    if (!(nu > 0.0)) throw DomainError("chi_square_quantile: degrees of freedom must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("chi_square_quantile: p outside [0,1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return 2.0 * boost::math::gamma_p_inv(0.5 * nu, p);
}

}  // namespace fasrsma::numerics
