#pragma once

// Elliptical copulas (Student-t and Gaussian) and the distribution of the
// best-port gain of a fluid antenna. With exponential port marginals
// F(g) = 1 - exp(-g / mean_gain), the CDF of max_n g_n is the copula
// evaluated at F(g) in every coordinate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fasrsma/channel.hpp"
#include "fasrsma/errors.hpp"
#include "fasrsma/numerics/mvt.hpp"
#include "fasrsma/numerics/random.hpp"
#include "fasrsma/numerics/special.hpp"

namespace fasrsma::copula {

using channel::ChannelRealization;
using channel::CorrelationMatrix;
using numerics::MvtResult;
using numerics::MvtSettings;

enum class CopulaFamily { student_t, gaussian };

inline const char* to_string(CopulaFamily f) {
    return f == CopulaFamily::student_t ? "student_t" : "gaussian";
}

struct CopulaSpec {
    CopulaFamily family = CopulaFamily::student_t;
    CorrelationMatrix sigma;
    double nu = 4.0;  ///< degrees of freedom, ignored for the Gaussian family

    std::size_t dim() const noexcept { return sigma.dim(); }

    void validate() const {
        fasrsma::detail::require(sigma.dim() >= 1, "CopulaSpec: empty correlation matrix");
        if (family == CopulaFamily::student_t) {
            fasrsma::detail::require(nu > 0.0 && !std::isnan(nu), "CopulaSpec: nu must be positive");
        }
        numerics::check_correlation_matrix(sigma.entries, "CopulaSpec");
    }
};

/// Probabilities are kept this far from {0, 1} before quantile transforms.
inline constexpr double kUniformClamp = 1e-15;

namespace detail {

inline double quantile(const CopulaSpec& spec, double u) {
    return spec.family == CopulaFamily::student_t ? numerics::student_t_quantile(u, spec.nu)
                                                  : numerics::normal_quantile(u);
}

inline double marginal_cdf(const CopulaSpec& spec, double x) {
    return spec.family == CopulaFamily::student_t ? numerics::student_t_cdf(x, spec.nu)
                                                  : numerics::normal_cdf(x);
}

inline MvtResult joint_cdf(const CopulaSpec& spec, std::span<const double> limits, const MvtSettings& settings) {
    const Eigen::MatrixXd sigma = spec.sigma.regularized();
    return spec.family == CopulaFamily::student_t ? numerics::mvt_cdf(limits, sigma, spec.nu, settings)
                                                  : numerics::mvn_cdf(limits, sigma, settings);
}

/// Common exponential marginal CDF 1 - exp(-g / mean_gain).
inline double exponential_cdf(double g, double mean_gain) { return -std::expm1(-g / mean_gain); }

}  // namespace detail

/// C(u_1, ..., u_N): the joint CDF evaluated at the marginal quantiles.
/// A zero coordinate gives exactly 0 and coordinates equal to 1 drop out.
inline MvtResult copula_cdf(std::span<const double> u, const CopulaSpec& spec, const MvtSettings& settings = {}) {
    spec.validate();
    if (u.size() != spec.dim()) throw DomainError("copula_cdf: probability vector length does not match copula dimension");
    for (double v : u) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("copula_cdf: probabilities must lie in [0, 1]");
    }
    std::vector<double> limits(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] == 0.0) return {0.0, 0.0};
        limits[i] = u[i] == 1.0 ? std::numeric_limits<double>::infinity()
                                : detail::quantile(spec, std::clamp(u[i], kUniformClamp, 1.0 - kUniformClamp));
    }
    return detail::joint_cdf(spec, limits, settings);
}

/// CDF of the best-port gain max_n g_n.
inline MvtResult fas_gain_cdf(double g, const CopulaSpec& spec, double mean_gain, const MvtSettings& settings = {}) {
    if (!(g >= 0.0)) throw DomainError("fas_gain_cdf: gain must be non-negative");
    fasrsma::detail::require(mean_gain > 0.0, "fas_gain_cdf: mean_gain must be positive");
    if (g == 0.0) return {0.0, 0.0};
    const std::vector<double> u(spec.dim(), detail::exponential_cdf(g, mean_gain));
    return copula_cdf(u, spec, settings);
}

/// Density of the best-port gain as the derivative of fas_gain_cdf: central
/// differences with Richardson extrapolation, halving the step until two
/// successive extrapolations agree to 1e-4 relative.
inline double fas_gain_pdf(double g, const CopulaSpec& spec, double mean_gain, const MvtSettings& settings = {}) {
    if (!(g > 0.0)) throw DomainError("fas_gain_pdf: gain must be positive");
    fasrsma::detail::require(mean_gain > 0.0, "fas_gain_pdf: mean_gain must be positive");
    auto central = [&](double h) {
        return (fas_gain_cdf(g + h, spec, mean_gain, settings).value -
                fas_gain_cdf(g - h, spec, mean_gain, settings).value) / (2.0 * h);
    };
    double h = 0.1 * std::min(g, mean_gain);
    double coarse = central(h);
    double previous = std::numeric_limits<double>::quiet_NaN();
    double estimate = coarse;
    for (int level = 0; level < 5; ++level) {
        h *= 0.5;
        const double fine = central(h);
        estimate = (4.0 * fine - coarse) / 3.0;
        if (std::isfinite(previous) && std::fabs(estimate - previous) <= 1e-4 * std::fabs(estimate)) break;
        previous = estimate;
        coarse = fine;
    }
    return std::max(estimate, 0.0);
}

/// The printed closed-form density: the multivariate t density evaluated at
/// the common quantile vector. It omits the marginal Jacobian factors of the
/// density of a maximum, so it is exposed for comparison only; fas_gain_pdf
/// is the reference density.
inline double fas_gain_pdf_closed_form(double g, const CopulaSpec& spec, double mean_gain) {
    if (!(g > 0.0)) throw DomainError("fas_gain_pdf_closed_form: gain must be positive");
    spec.validate();
    const double nu = spec.family == CopulaFamily::student_t ? spec.nu : numerics::kGaussianRoutingDof;
    const auto n = static_cast<double>(spec.dim());
    const Eigen::MatrixXd sigma = spec.sigma.regularized();
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("fas_gain_pdf_closed_form: matrix not positive definite", spec.sigma.applied_jitter);
    const double u = std::clamp(detail::exponential_cdf(g, mean_gain), kUniformClamp, 1.0 - kUniformClamp);
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(sigma.rows(), numerics::student_t_quantile(u, nu));
    const double quad = t.dot(llt.solve(t));
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double log_value = std::lgamma(0.5 * (nu + n)) - std::lgamma(0.5 * nu) -
                             0.5 * (n * std::log(std::numbers::pi * nu) + log_det) -
                             0.5 * (nu + n) * std::log1p(quad / nu);
    return std::exp(log_value);
}

/// Exact elliptical-copula sampler. Student-t: t = Z sqrt(nu / S) with
/// Z ~ N(0, Sigma) and S ~ chi2(nu), mapped through the univariate t CDF.
/// Gaussian: Phi(Z).
class CopulaSampler {
public:
    CopulaSampler(const CopulaSpec& spec, std::uint64_t seed, std::uint64_t stream = 0)
        : spec_(spec),
          lower_((spec.validate(), spec.sigma.sampling_factor())),
          rng_(numerics::derive_seed(seed, stream, 0x636f70)),
          chi2_(spec.family == CopulaFamily::student_t ? spec.nu : 1.0),
          z_(lower_.rows()) {}

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.rows()); }

    /// Draw the latent elliptical vector (t or normal scale) into `out`.
    void fill_latent(std::span<double> out) {
        for (Eigen::Index i = 0; i < z_.size(); ++i) z_(i) = normal_(rng_);
        double scale = 1.0;
        if (spec_.family == CopulaFamily::student_t) scale = std::sqrt(spec_.nu / chi2_(rng_));
        for (Eigen::Index i = 0; i < z_.size(); ++i) {
            out[static_cast<std::size_t>(i)] = scale * lower_.row(i).head(i + 1).dot(z_.head(i + 1));
        }
    }

    /// Draw one vector of copula uniforms into `out`.
    void fill(std::span<double> out) {
        fill_latent(out);
        for (double& v : out) v = detail::marginal_cdf(spec_, v);
    }

    std::vector<double> next() {
        std::vector<double> u(dim());
        fill(u);
        return u;
    }

private:
    CopulaSpec spec_;
    Eigen::MatrixXd lower_;
    numerics::Engine rng_;
    std::normal_distribution<double> normal_;
    std::chi_squared_distribution<double> chi2_;
    Eigen::VectorXd z_;
};

inline std::vector<std::vector<double>> sample_copula(const CopulaSpec& spec, std::size_t count, std::uint64_t seed) {
    CopulaSampler sampler(spec, seed);
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.next());
    return out;
}

/// Inverse exponential marginal: g_i = -mean_gain ln(1 - u_i).
inline ChannelRealization gains_from_uniforms(std::span<const double> u, double mean_gain) {
    fasrsma::detail::require(mean_gain > 0.0, "gains_from_uniforms: mean_gain must be positive");
    ChannelRealization out{std::vector<double>(u.size())};
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] >= 0.0 && u[i] < 1.0)) throw DomainError("gains_from_uniforms: probabilities must lie in [0, 1)");
        out.gains[i] = -mean_gain * std::log1p(-u[i]);
    }
    return out;
}

}  // namespace fasrsma::copula
