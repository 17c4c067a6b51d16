#pragma once

// Multivariate normal and Student-t CDFs by separation of variables
// integrated with a randomly shifted Richtmyer lattice.
//
// The correlation matrix is factored with greedy variable reordering (the
// tightest conditional limit goes first), which turns the orthant
// probability into an integral over the unit cube whose integrand is a
// product of univariate normal CDFs. For finite degrees of freedom one more
// cube coordinate draws the chi scale variable r = sqrt(chi2_nu / nu) and the
// limits are multiplied by r. Independent random shifts give the error
// estimate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fasrsma/errors.hpp"
#include "fasrsma/numerics/cholesky.hpp"
#include "fasrsma/numerics/random.hpp"
#include "fasrsma/numerics/special.hpp"

namespace fasrsma::numerics {

/// Degrees of freedom at or above which the t family is evaluated as normal.
inline constexpr double kGaussianRoutingDof = 1e6;

struct MvtSettings {
    std::size_t qmc_points = 8192;  ///< lattice points per random shift
    std::size_t shifts = 12;        ///< independent shifts, for the error estimate
    double error_target = 0.0;      ///< std_error goal; 0 disables point doubling
    double jitter = 1e-4;           ///< largest diagonal regularization allowed
    std::uint64_t seed = 0x5eed'f00d;

    void validate() const {
        fasrsma::detail::require(qmc_points >= 16, "MvtSettings: qmc_points must be >= 16");
        fasrsma::detail::require(shifts >= 2, "MvtSettings: shifts must be >= 2");
        fasrsma::detail::require(error_target >= 0.0 && std::isfinite(error_target),
                        "MvtSettings: error_target must be a non-negative real");
        fasrsma::detail::require(jitter >= 0.0 && jitter < 1e-3, "MvtSettings: jitter must lie in [0, 1e-3)");
    }
};

struct MvtResult {
    double value = 0.0;
    double std_error = 0.0;
};

namespace detail {

inline std::vector<double> lattice_generator(std::size_t dims) {
    std::vector<double> gen;
    gen.reserve(dims);
    for (unsigned candidate = 2; gen.size() < dims; ++candidate) {
        bool prime = true;
        for (unsigned d = 2; d * d <= candidate; ++d) {
            if (candidate % d == 0) { prime = false; break; }
        }
        if (prime) gen.push_back(std::sqrt(static_cast<double>(candidate)));
    }
    return gen;
}

struct SovProblem {
    Eigen::MatrixXd lower;      // reordered Cholesky factor
    std::vector<double> upper;  // reordered finite limits
    double jitter = 0.0;
};

// Greedy reordering (smallest expected conditional probability first)
// fused with the Cholesky factorization.
inline SovProblem prepare(std::span<const double> upper, const Eigen::MatrixXd& sigma,
                          const MvtSettings& settings) {
    auto factored = factor_with_jitter(sigma, kDefaultJitterLadder, settings.jitter);
    const auto n = sigma.rows();
    Eigen::MatrixXd a = factored.matrix;
    std::vector<double> b(upper.begin(), upper.end());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);

    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = i;
        double best_prob = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = i; j < n; ++j) {
            const double var = a(j, j) - l.row(j).head(i).squaredNorm();
            if (!(var > 0.0)) continue;
            double shift = 0.0;
            for (Eigen::Index k = 0; k < i; ++k) shift += l(j, k) * y[static_cast<std::size_t>(k)];
            const double prob = normal_cdf((b[static_cast<std::size_t>(j)] - shift) / std::sqrt(var));
            if (prob < best_prob) { best_prob = prob; best = j; }
        }
        if (best != i) {
            a.row(i).swap(a.row(best));
            a.col(i).swap(a.col(best));
            l.row(i).swap(l.row(best));
            std::swap(b[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(best)]);
        }
        const double var = a(i, i) - l.row(i).head(i).squaredNorm();
        if (!(var > 0.0)) {
            // Reordering exposed a non-positive pivot: use the plain factor.
            return {factored.lower, std::vector<double>(upper.begin(), upper.end()), factored.jitter};
        }
        l(i, i) = std::sqrt(var);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            l(j, i) = (a(j, i) - l.row(j).head(i).dot(l.row(i).head(i))) / l(i, i);
        }
        double shift = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) shift += l(i, k) * y[static_cast<std::size_t>(k)];
        const double limit = (b[static_cast<std::size_t>(i)] - shift) / l(i, i);
        const double mass = std::max(normal_cdf(limit), 1e-300);
        // mean of a standard normal truncated to (-inf, limit]
        y[static_cast<std::size_t>(i)] =
            -std::exp(-0.5 * limit * limit) / std::sqrt(2.0 * std::numbers::pi) / mass;
    }
    return {std::move(l), std::move(b), factored.jitter};
}

inline double clamp_unit(double w) {
    return std::clamp(w, 1e-16, 1.0 - 1e-16);
}

// Integrand at cube point w. `nu` is +inf for the normal case, in which case
// w carries n - 1 coordinates; otherwise w[0] drives the chi scale.
inline double sov_integrand(const SovProblem& p, std::span<const double> w, double nu,
                            std::vector<double>& y) {
    const std::size_t n = p.upper.size();
    std::size_t next = 0;
    double scale = 1.0;
    if (std::isfinite(nu)) {
        scale = std::sqrt(chi_square_quantile(clamp_unit(w[next++]), nu) / nu);
    }
    double f = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double shift = 0.0;
        for (std::size_t k = 0; k < i; ++k) shift += p.lower(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * y[k];
        const double e = normal_cdf((scale * p.upper[i] - shift) /
                                    p.lower(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        f *= e;
        if (f == 0.0) return 0.0;
        if (i + 1 < n) y[i] = normal_quantile(clamp_unit(w[next++] * e));
    }
    return f;
}

inline MvtResult integrate(const SovProblem& problem, double nu, const MvtSettings& settings) {
    const std::size_t n = problem.upper.size();
    const std::size_t dims = std::isfinite(nu) ? n : n - 1;
    const auto gen = lattice_generator(dims);
    const std::size_t max_points = settings.qmc_points * 16;

    std::vector<double> w(dims), shift(dims), y(n);
    std::size_t points = settings.qmc_points;
    MvtResult result;
    for (;;) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t s = 0; s < settings.shifts; ++s) {
            Engine rng(derive_seed(settings.seed, s, 0x6d7674));
            for (auto& d : shift) d = uniform01(rng);
            double acc = 0.0;
            for (std::size_t k = 1; k <= points; ++k) {
                for (std::size_t d = 0; d < dims; ++d) {
                    double x = static_cast<double>(k) * gen[d] + shift[d];
                    x -= std::floor(x);
                    w[d] = 1.0 - std::fabs(2.0 * x - 1.0);  // tent (baker's) periodization
                }
                acc += sov_integrand(problem, w, nu, y);
            }
            const double estimate = acc / static_cast<double>(points);
            sum += estimate;
            sum_sq += estimate * estimate;
        }
        const double m = static_cast<double>(settings.shifts);
        const double mean = sum / m;
        const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
        result = {std::clamp(mean, 0.0, 1.0), std::sqrt(var / m)};
        if (settings.error_target <= 0.0 || result.std_error <= settings.error_target ||
            points * 2 > max_points) {
            break;
        }
        points *= 2;
    }
    return result;
}

// Shared front end: validation, limits at -inf/+inf, the one-dimensional
// closed form, then the lattice integration.
inline MvtResult orthant_cdf(std::span<const double> upper, const Eigen::MatrixXd& sigma, double nu,
                             const MvtSettings& settings, const char* who) {
    settings.validate();
    check_correlation_matrix(sigma, who);
    if (static_cast<Eigen::Index>(upper.size()) != sigma.rows()) {
        throw DomainError(std::string(who) + ": limit vector length does not match matrix dimension");
    }
    std::vector<Eigen::Index> kept;
    for (std::size_t i = 0; i < upper.size(); ++i) {
        const double u = upper[i];
        if (std::isnan(u)) throw DomainError(std::string(who) + ": NaN upper limit");
        if (u == -std::numeric_limits<double>::infinity()) return {0.0, 0.0};
        if (u != std::numeric_limits<double>::infinity()) kept.push_back(static_cast<Eigen::Index>(i));
    }
    if (kept.empty()) return {1.0, 0.0};
    if (kept.size() == 1) {
        const double x = upper[static_cast<std::size_t>(kept.front())];
        return {std::isfinite(nu) ? student_t_cdf(x, nu) : normal_cdf(x), 0.0};
    }
    const auto m = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd sub(m, m);
    std::vector<double> limits(kept.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        limits[static_cast<std::size_t>(i)] = upper[static_cast<std::size_t>(kept[static_cast<std::size_t>(i)])];
        for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = sigma(kept[static_cast<std::size_t>(i)], kept[static_cast<std::size_t>(j)]);
    }
    const auto problem = prepare(limits, sub, settings);
    return integrate(problem, nu, settings);
}

}  // namespace detail

/// Multivariate standard normal CDF P(X <= upper), X ~ N(0, sigma).
inline MvtResult mvn_cdf(std::span<const double> upper, const Eigen::MatrixXd& sigma,
                         const MvtSettings& settings = {}) {
    return detail::orthant_cdf(upper, sigma, std::numeric_limits<double>::infinity(), settings, "mvn_cdf");
}

/// Multivariate Student-t CDF with correlation matrix `sigma` and `nu`
/// degrees of freedom. nu >= 1e6 is evaluated as the normal limit.
inline MvtResult mvt_cdf(std::span<const double> upper, const Eigen::MatrixXd& sigma, double nu,
                         const MvtSettings& settings = {}) {
    if (!(nu > 0.0)) throw DomainError("mvt_cdf: degrees of freedom must be positive");
    if (nu >= kGaussianRoutingDof) return mvn_cdf(upper, sigma, settings);
    return detail::orthant_cdf(upper, sigma, nu, settings, "mvt_cdf");
}

}  // namespace fasrsma::numerics
