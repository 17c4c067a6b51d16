#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "fasrsma/numerics/mvt.hpp"

using namespace fasrsma::numerics;
using fasrsma::DomainError;
using fasrsma::SingularMatrixError;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd equicorrelation(int n, double rho) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, rho);
    m.diagonal().setOnes();
    return m;
}

// P(X1 <= a, X2 <= b) for a bivariate t with correlation rho. Given X1 = x,
// X2 is t with nu + 1 dof, location rho x and scale
// sqrt((1 - rho^2)(nu + x^2) / (nu + 1)); the outer integral over x is
// adaptive Gauss-Kronrod on (-inf, a].
double bivariate_t_oracle(double a, double b, double rho, double nu) {
    const boost::math::students_t outer(nu), inner(nu + 1);
    auto integrand = [&](double x) {
        const double scale = std::sqrt((1 - rho * rho) * (nu + x * x) / (nu + 1));
        return boost::math::pdf(outer, x) * boost::math::cdf(inner, (b - rho * x) / scale);
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -kInf, a, 20, 1e-14);
}

// Plain Monte Carlo estimate of P(X <= upper) for X ~ N(0, sigma).
std::pair<double, double> brute_mvn(const std::vector<double>& upper, const Eigen::MatrixXd& sigma, long samples,
                                    std::uint64_t seed) {
    const Eigen::MatrixXd l = sigma.llt().matrixL();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    const auto n = sigma.rows();
    Eigen::VectorXd draw(n), x(n);
    long hits = 0;
    for (long s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < n; ++i) draw(i) = z(rng);
        x.noalias() = l * draw;
        bool inside = true;
        for (Eigen::Index i = 0; i < n && inside; ++i) inside = x(i) <= upper[static_cast<std::size_t>(i)];
        hits += inside;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {p, std::sqrt(p * (1 - p) / static_cast<double>(samples))};
}

}  // namespace

TEST(MvnCdf, OneDimensional) {
    const std::vector<double> u{0.0};
    EXPECT_EQ(mvn_cdf(u, Eigen::MatrixXd::Identity(1, 1)).value, 0.5);
}

TEST(MvnCdf, IndependenceFactorizes) {
    const std::vector<double> u{0.4, -1.1};
    const auto r = mvn_cdf(u, Eigen::MatrixXd::Identity(2, 2));
    EXPECT_NEAR(r.value, normal_cdf(0.4) * normal_cdf(-1.1), std::max(4 * r.std_error, 1e-12));
}

TEST(MvnCdf, TrivariateOrthantClosedForm) {
    // P(X <= 0) for a trivariate normal with common correlation rho is
    // 1/8 + 3 asin(rho) / (4 pi).
    const std::vector<double> u{0.0, 0.0, 0.0};
    const auto r = mvn_cdf(u, equicorrelation(3, 0.3));
    const double exact = 0.125 + 3.0 * std::asin(0.3) / (4.0 * std::numbers::pi);
    EXPECT_NEAR(r.value, exact, std::max(4 * r.std_error, 1e-7));
}

TEST(MvnCdf, BruteForceMonteCarlo) {
    const std::vector<double> u{0.0, 0.0, 0.0};
    const auto r = mvn_cdf(u, equicorrelation(3, 0.3));
    const auto [p, se] = brute_mvn(u, equicorrelation(3, 0.3), 100'000'000, 2024);
    EXPECT_NEAR(r.value, p, 3.0 * std::hypot(se, r.std_error));
}

TEST(MvnCdf, BruteForceMonteCarloUnevenLimits) {
    Eigen::MatrixXd s(4, 4);
    s << 1, 0.5, 0.2, -0.1,
         0.5, 1, 0.4, 0.1,
         0.2, 0.4, 1, 0.3,
         -0.1, 0.1, 0.3, 1;
    const std::vector<double> u{0.5, -0.3, 1.2, 0.1};
    const auto r = mvn_cdf(u, s);
    const auto [p, se] = brute_mvn(u, s, 4'000'000, 7);
    EXPECT_NEAR(r.value, p, 3.0 * std::hypot(se, r.std_error));
}

TEST(MvtCdf, OneDimensionalReduction) {
    const std::vector<double> u{0.8};
    const auto r = mvt_cdf(u, Eigen::MatrixXd::Identity(1, 1), 3.0);
    EXPECT_NEAR(r.value, student_t_cdf(0.8, 3.0), std::max(3 * r.std_error, 1e-15));
}

TEST(MvtCdf, InfiniteLimits) {
    const std::vector<double> all{kInf, kInf, kInf};
    EXPECT_EQ(mvt_cdf(all, equicorrelation(3, 0.4), 5.0).value, 1.0);
    const std::vector<double> one_low{0.2, -kInf, 1.0};
    EXPECT_EQ(mvt_cdf(one_low, equicorrelation(3, 0.4), 5.0).value, 0.0);
    // dropping +inf coordinates leaves the marginal
    const std::vector<double> partial{kInf, 0.7, kInf};
    EXPECT_NEAR(mvt_cdf(partial, equicorrelation(3, 0.4), 5.0).value, student_t_cdf(0.7, 5.0), 1e-15);
}

TEST(MvtCdf, BivariateQuadratureOracle) {
    const std::vector<double> u{0.3, 0.3};
    const double exact = bivariate_t_oracle(0.3, 0.3, 0.5, 5.0);
    MvtSettings fine;
    fine.qmc_points = 1 << 16;
    fine.shifts = 16;
    const auto r = mvt_cdf(u, equicorrelation(2, 0.5), 5.0, fine);
    EXPECT_LT(r.std_error, 1e-6);
    EXPECT_NEAR(r.value, exact, 4.0 * r.std_error + 1e-8);
    const auto coarse = mvt_cdf(u, equicorrelation(2, 0.5), 5.0);
    EXPECT_NEAR(coarse.value, exact, 4.0 * coarse.std_error + 1e-8);
}

TEST(MvtCdf, BivariateOracleAsymmetric) {
    for (double rho : {-0.7, 0.2, 0.9}) {
        const std::vector<double> u{-0.5, 1.4};
        const double exact = bivariate_t_oracle(-0.5, 1.4, rho, 3.0);
        const auto r = mvt_cdf(u, equicorrelation(2, rho), 3.0);
        EXPECT_NEAR(r.value, exact, 4.0 * r.std_error + 1e-8) << rho;
    }
}

TEST(MvtCdf, LargeDofRoutesToNormal) {
    const std::vector<double> u{0.1, 0.5, -0.2};
    const auto t = mvt_cdf(u, equicorrelation(3, 0.3), 2e6);
    const auto n = mvn_cdf(u, equicorrelation(3, 0.3));
    EXPECT_EQ(t.value, n.value);
}

TEST(MvtCdf, SeedDeterminism) {
    const std::vector<double> u{0.1, 0.5, -0.2, 0.9};
    MvtSettings a;
    a.seed = 99;
    const auto r1 = mvt_cdf(u, equicorrelation(4, 0.3), 4.0, a);
    const auto r2 = mvt_cdf(u, equicorrelation(4, 0.3), 4.0, a);
    EXPECT_EQ(r1.value, r2.value);
    EXPECT_EQ(r1.std_error, r2.std_error);
    a.seed = 100;
    const auto r3 = mvt_cdf(u, equicorrelation(4, 0.3), 4.0, a);
    EXPECT_NE(r1.value, r3.value);
    EXPECT_NEAR(r1.value, r3.value, 6.0 * std::hypot(r1.std_error, r3.std_error));
}

TEST(MvtCdf, ErrorTargetRefines) {
    const std::vector<double> u{0.1, 0.5, -0.2, 0.9, 0.0};
    MvtSettings s;
    s.qmc_points = 64;
    const auto plain = mvt_cdf(u, equicorrelation(5, 0.3), 4.0, s);
    s.error_target = plain.std_error / 4.0;
    const auto refined = mvt_cdf(u, equicorrelation(5, 0.3), 4.0, s);
    EXPECT_LT(refined.std_error, plain.std_error);
}

TEST(MvtCdf, Errors) {
    const std::vector<double> u{0.1, 0.2};
    Eigen::MatrixXd asym = equicorrelation(2, 0.3);
    asym(0, 1) = 0.4;
    EXPECT_THROW(mvt_cdf(u, asym, 4.0), DomainError);
    EXPECT_THROW(mvt_cdf(u, equicorrelation(3, 0.3), 4.0), DomainError);
    EXPECT_THROW(mvt_cdf(u, equicorrelation(2, 0.3), 0.0), DomainError);
    MvtSettings bad;
    bad.shifts = 1;
    EXPECT_THROW(mvt_cdf(u, equicorrelation(2, 0.3), 4.0, bad), DomainError);
    bad = {};
    bad.jitter = 1e-3;
    EXPECT_THROW(mvt_cdf(u, equicorrelation(2, 0.3), 4.0, bad), DomainError);
    const std::vector<double> u3{0.1, 0.2, 0.3};
    try {
        mvt_cdf(u3, equicorrelation(3, -0.9), 4.0);
        FAIL() << "expected SingularMatrixError";
    } catch (const SingularMatrixError& e) {
        EXPECT_EQ(e.attempted_jitter(), 1e-4);
    }
}

// Fréchet-Hoeffding bounds on the joint CDF in terms of its marginals, and
// monotonicity in every upper limit.
TEST(MvtProperties, FrechetBoundsAndMonotonicity) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> lim(-2.0, 2.0), rho(-0.3, 0.95), dof(1.0, 60.0);
    MvtSettings s;
    s.qmc_points = 1024;
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 4;
        const double nu = dof(rng);
        const auto sigma = equicorrelation(n, std::max(rho(rng), -1.0 / (n - 1) + 0.05));
        std::vector<double> u(static_cast<std::size_t>(n));
        for (auto& x : u) x = lim(rng);
        const auto r = mvt_cdf(u, sigma, nu, s);
        double lower = 1.0 - n;
        double upper = 1.0;
        for (double x : u) {
            lower += student_t_cdf(x, nu);
            upper = std::min(upper, student_t_cdf(x, nu));
        }
        const double slack = 5.0 * r.std_error + 1e-12;
        ASSERT_GE(r.value, std::max(lower, 0.0) - slack);
        ASSERT_LE(r.value, upper + slack);
        ASSERT_GE(r.std_error, 0.0);

        auto bigger = u;
        bigger[static_cast<std::size_t>(trial % n)] += 0.5;
        const auto rb = mvt_cdf(bigger, sigma, nu, s);
        ASSERT_GE(rb.value, r.value - 5.0 * std::hypot(r.std_error, rb.std_error) - 1e-12);
    }
}
