#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "fasrsma/errors.hpp"

namespace fasrsma::numerics {

/// Escalating diagonal regularization tried when a correlation matrix is not
/// numerically positive definite.
inline constexpr std::array<double, 3> kDefaultJitterLadder{1e-10, 1e-6, 1e-4};

/// Pivots at or below this value count as a failed factorization. Correlation
/// matrices have unit diagonal, so the threshold is absolute.
inline constexpr double kMinPivot = 1e-12;

inline void check_correlation_matrix(const Eigen::MatrixXd& sigma, const char* who) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
        std::ostringstream os;
        os << who << ": correlation matrix must be square and non-empty (got "
           << sigma.rows() << "x" << sigma.cols() << ")";
        throw DomainError(os.str());
    }
    const auto n = sigma.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::fabs(sigma(i, i) - 1.0) > 1e-12) {
            throw DomainError(std::string(who) + ": correlation matrix must have unit diagonal");
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = sigma(i, j);
            if (!std::isfinite(v) || v < -1.0 - 1e-12 || v > 1.0 + 1e-12) {
                throw DomainError(std::string(who) + ": correlation entries must lie in [-1, 1]");
            }
            if (std::fabs(v - sigma(j, i)) > 1e-12) {
                throw DomainError(std::string(who) + ": correlation matrix must be symmetric");
            }
        }
    }
}

/// Lower Cholesky factor, or nullopt when a pivot falls below kMinPivot.
inline std::optional<Eigen::MatrixXd> try_cholesky(const Eigen::MatrixXd& a) {
    const auto n = a.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > kMinPivot)) return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
        }
    }
    return l;
}

/// Correlation matrix with jitter folded in and the unit diagonal restored:
/// (sigma + jitter I) / (1 + jitter).
inline Eigen::MatrixXd regularized(const Eigen::MatrixXd& sigma, double jitter) {
    Eigen::MatrixXd out = sigma;
    out.diagonal().array() += jitter;
    out /= (1.0 + jitter);
    return out;
}

struct RegularizedFactor {
    Eigen::MatrixXd matrix;  ///< regularized correlation matrix
    Eigen::MatrixXd lower;   ///< its lower Cholesky factor
    double jitter = 0.0;
};

/// Factor `sigma`, escalating through `ladder` (entries above `max_jitter`
/// are skipped) until the factorization succeeds.
inline RegularizedFactor factor_with_jitter(const Eigen::MatrixXd& sigma,
                                            std::span<const double> ladder,
                                            double max_jitter) {
    if (auto l = try_cholesky(sigma)) return {sigma, *l, 0.0};
    double attempted = 0.0;
    for (double jitter : ladder) {
        if (jitter > max_jitter) break;
        attempted = jitter;
        Eigen::MatrixXd repaired = regularized(sigma, jitter);
        if (auto l = try_cholesky(repaired)) return {std::move(repaired), *l, jitter};
    }
    std::ostringstream os;
    os << "Cholesky factorization failed after jitter " << attempted;
    throw SingularMatrixError(os.str(), attempted);
}

}  // namespace fasrsma::numerics
