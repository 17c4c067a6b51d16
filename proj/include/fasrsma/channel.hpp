#pragma once

// Fluid-antenna port geometry, the Jakes spatial correlation between ports,
// and correlated channel generators (Rayleigh via a Cholesky factor, Rician
// via explicit line-of-sight plus scattered steering vectors).

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fasrsma/errors.hpp"
#include "fasrsma/numerics/cholesky.hpp"
#include "fasrsma/numerics/random.hpp"
#include "fasrsma/numerics/special.hpp"

namespace fasrsma::channel {

/// Ports laid out on an n1 x n2 grid spanning w1 x w2 wavelengths.
struct PortGrid {
    std::size_t n1 = 1;
    std::size_t n2 = 1;
    double w1 = 0.0;
    double w2 = 0.0;

    std::size_t total_ports() const noexcept { return n1 * n2; }

    /// Distance in wavelengths between adjacent ports along each dimension.
    /// A single-port dimension has no extent, so its spacing is zero.
    double spacing1() const noexcept { return n1 > 1 ? w1 / static_cast<double>(n1 - 1) : 0.0; }
    double spacing2() const noexcept { return n2 > 1 ? w2 / static_cast<double>(n2 - 1) : 0.0; }

    void validate() const {
        fasrsma::detail::require(n1 >= 1 && n2 >= 1, "PortGrid: port counts must be positive");
        fasrsma::detail::require(std::isfinite(w1) && std::isfinite(w2) && w1 >= 0.0 && w2 >= 0.0,
                        "PortGrid: aperture lengths must be finite and non-negative");
    }

    friend bool operator==(const PortGrid&, const PortGrid&) = default;
};

/// Correlation matrix together with the diagonal jitter its Cholesky factor
/// needed. `entries` is the unregularized matrix.
struct CorrelationMatrix {
    Eigen::MatrixXd entries;
    double applied_jitter = 0.0;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(entries.rows()); }

    /// (entries + jitter I) / (1 + jitter): the matrix actually factored.
    Eigen::MatrixXd regularized() const { return numerics::regularized(entries, applied_jitter); }

    /// Lower factor for sampling. A matrix stored without jitter that is only
    /// semidefinite (e.g. perfect dependence) is repaired on the fly.
    Eigen::MatrixXd sampling_factor() const {
        return numerics::factor_with_jitter(regularized(), numerics::kDefaultJitterLadder,
                                            numerics::kDefaultJitterLadder.back())
            .lower;
    }

    static CorrelationMatrix identity(std::size_t n) {
        return {Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), 0.0};
    }
};

struct PortIndex2d {
    std::size_t first;   ///< 1-based index along dimension 1
    std::size_t second;  ///< 1-based index along dimension 2
    friend bool operator==(const PortIndex2d&, const PortIndex2d&) = default;
};

/// Row-major mapping of a 1-based port number onto the grid, second index
/// fastest (the Kronecker order of the steering vector).
inline PortIndex2d port_to_2d(std::size_t n, const PortGrid& grid) {
    if (n < 1 || n > grid.total_ports()) {
        std::ostringstream os;
        os << "port_to_2d: port " << n << " outside [1, " << grid.total_ports() << "]";
        throw DomainError(os.str());
    }
    return {(n - 1) / grid.n2 + 1, (n - 1) % grid.n2 + 1};
}

inline std::size_t port_from_2d(PortIndex2d idx, const PortGrid& grid) {
    if (idx.first < 1 || idx.first > grid.n1 || idx.second < 1 || idx.second > grid.n2) {
        throw DomainError("port_from_2d: index outside the grid");
    }
    return (idx.first - 1) * grid.n2 + idx.second;
}

/// Jakes correlation J0(2 pi d) between ports n and m, d being their
/// separation in wavelengths.
inline double spatial_correlation(const PortGrid& grid, std::size_t n, std::size_t m) {
    const auto a = port_to_2d(n, grid);
    const auto b = port_to_2d(m, grid);
    const double d1 = (static_cast<double>(a.first) - static_cast<double>(b.first)) * grid.spacing1();
    const double d2 = (static_cast<double>(a.second) - static_cast<double>(b.second)) * grid.spacing2();
    return numerics::bessel_j0(2.0 * std::numbers::pi * std::sqrt(d1 * d1 + d2 * d2));
}

/// Assemble the port correlation matrix. When the Cholesky factorization
/// fails, the smallest rung of `jitter_ladder` that repairs it is recorded in
/// `applied_jitter`.
inline CorrelationMatrix build_correlation_matrix(
    const PortGrid& grid,
    std::span<const double> jitter_ladder = numerics::kDefaultJitterLadder) {
    grid.validate();
    const auto n = static_cast<Eigen::Index>(grid.total_ports());
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = spatial_correlation(grid, static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1));
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    const double largest = jitter_ladder.empty() ? 0.0 : jitter_ladder.back();
    auto factored = numerics::factor_with_jitter(r, jitter_ladder, largest);
    return {std::move(r), factored.jitter};
}

/// Per-port channel gains |h_n|^2 of one realization.
struct ChannelRealization {
    std::vector<double> gains;
};

/// Rayleigh-faded port gains with Jakes spatial correlation: the complex
/// channel vector is circularly-symmetric Gaussian with covariance
/// mean_gain * R, generated by applying the Cholesky factor of R to the real
/// and imaginary parts independently.
class RayleighGainGenerator {
public:
    RayleighGainGenerator(const CorrelationMatrix& sigma, double mean_gain, std::uint64_t seed,
                          std::uint64_t stream = 0)
        : lower_(sigma.sampling_factor()),
          amplitude_(std::sqrt(mean_gain / 2.0)),
          rng_(numerics::derive_seed(seed, stream, 0x7261796c)),
          re_(lower_.rows()),
          im_(lower_.rows()) {
        fasrsma::detail::require(mean_gain > 0.0 && std::isfinite(mean_gain),
                        "RayleighGainGenerator: mean_gain must be positive");
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.rows()); }

    void fill(std::span<double> gains) {
        for (Eigen::Index i = 0; i < re_.size(); ++i) {
            re_(i) = normal_(rng_);
            im_(i) = normal_(rng_);
        }
        const Eigen::VectorXd x = lower_.triangularView<Eigen::Lower>() * re_;
        const Eigen::VectorXd y = lower_.triangularView<Eigen::Lower>() * im_;
        for (Eigen::Index i = 0; i < re_.size(); ++i) {
            const double a = amplitude_ * x(i);
            const double b = amplitude_ * y(i);
            gains[static_cast<std::size_t>(i)] = a * a + b * b;
        }
    }

    /// Underlying complex channel of the next realization.
    std::vector<std::complex<double>> next_channel() {
        for (Eigen::Index i = 0; i < re_.size(); ++i) {
            re_(i) = normal_(rng_);
            im_(i) = normal_(rng_);
        }
        const Eigen::VectorXd x = lower_.triangularView<Eigen::Lower>() * re_;
        const Eigen::VectorXd y = lower_.triangularView<Eigen::Lower>() * im_;
        std::vector<std::complex<double>> h(static_cast<std::size_t>(re_.size()));
        for (Eigen::Index i = 0; i < re_.size(); ++i) h[static_cast<std::size_t>(i)] = {amplitude_ * x(i), amplitude_ * y(i)};
        return h;
    }

    ChannelRealization next() {
        ChannelRealization out{std::vector<double>(dim())};
        fill(out.gains);
        return out;
    }

private:
    Eigen::MatrixXd lower_;
    double amplitude_;
    numerics::Engine rng_;
    std::normal_distribution<double> normal_;
    Eigen::VectorXd re_;
    Eigen::VectorXd im_;
};

inline std::vector<ChannelRealization> generate_rayleigh_gains(const CorrelationMatrix& sigma, double mean_gain,
                                                               std::size_t count, std::uint64_t seed) {
    RayleighGainGenerator gen(sigma, mean_gain, seed);
    std::vector<ChannelRealization> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(gen.next());
    return out;
}

struct RiceChannelParams {
    double rice_factor = 0.0;  ///< K; +inf gives a pure line-of-sight channel
    double los_phase = 0.0;    ///< radians
    double los_azimuth = 0.0;
    double los_elevation = 0.0;
    std::size_t num_paths = 1;
    std::vector<double> azimuths;    ///< one per scattered path
    std::vector<double> elevations;  ///< one per scattered path

    void validate() const {
        fasrsma::detail::require(rice_factor >= 0.0, "RiceChannelParams: rice_factor must be non-negative");
        fasrsma::detail::require(num_paths >= 1, "RiceChannelParams: num_paths must be positive");
        fasrsma::detail::require(azimuths.size() == num_paths && elevations.size() == num_paths,
                        "RiceChannelParams: angle vectors must have num_paths entries");
    }
};

/// Receive steering vector: Kronecker product of the per-dimension phase
/// progressions exp(j 2 pi i spacing_l sin(theta) cos(psi)), i = 0..N_l - 1.
inline std::vector<std::complex<double>> steering_vector(const PortGrid& grid, double azimuth, double elevation) {
    const double phase_rate = 2.0 * std::numbers::pi * std::sin(azimuth) * std::cos(elevation);
    std::vector<std::complex<double>> a(grid.total_ports());
    for (std::size_t i = 0; i < grid.n1; ++i) {
        const auto a1 = std::polar(1.0, phase_rate * grid.spacing1() * static_cast<double>(i));
        for (std::size_t j = 0; j < grid.n2; ++j) {
            const auto a2 = std::polar(1.0, phase_rate * grid.spacing2() * static_cast<double>(j));
            a[i * grid.n2 + j] = a1 * a2;
        }
    }
    return a;
}

/// Rician port channels: a deterministic line-of-sight term plus num_paths
/// scattered components with i.i.d. unit-variance complex Gaussian weights.
class RiceChannelGenerator {
public:
    RiceChannelGenerator(const PortGrid& grid, const RiceChannelParams& params, std::uint64_t seed,
                         std::uint64_t stream = 0)
        : rng_(numerics::derive_seed(seed, stream, 0x72696365)) {
        grid.validate();
        params.validate();
        const std::size_t n = grid.total_ports();
        const bool pure_los = std::isinf(params.rice_factor);
        const double k = params.rice_factor;
        const double los_weight = pure_los ? 1.0 : std::sqrt(k / (k + 1.0));
        scatter_weight_ = pure_los ? 0.0 : std::sqrt(1.0 / (static_cast<double>(params.num_paths) * (k + 1.0)));
        los_.resize(n);
        const auto a0 = steering_vector(grid, params.los_azimuth, params.los_elevation);
        const auto rotation = std::polar(los_weight, params.los_phase);
        for (std::size_t i = 0; i < n; ++i) los_[i] = rotation * a0[i];
        paths_.reserve(params.num_paths);
        for (std::size_t l = 0; l < params.num_paths; ++l) {
            paths_.push_back(steering_vector(grid, params.azimuths[l], params.elevations[l]));
        }
        h_.resize(n);
    }

    std::size_t dim() const noexcept { return los_.size(); }

    void fill(std::span<double> gains) {
        h_ = los_;
        if (scatter_weight_ > 0.0) {
            for (const auto& a : paths_) {
                // kappa ~ CN(0, 1)
                const std::complex<double> kappa(normal_(rng_) * std::numbers::sqrt2 / 2.0,
                                                 normal_(rng_) * std::numbers::sqrt2 / 2.0);
                const auto w = scatter_weight_ * kappa;
                for (std::size_t i = 0; i < h_.size(); ++i) h_[i] += w * a[i];
            }
        }
        for (std::size_t i = 0; i < h_.size(); ++i) gains[i] = std::norm(h_[i]);
    }

    ChannelRealization next() {
        ChannelRealization out{std::vector<double>(dim())};
        fill(out.gains);
        return out;
    }

private:
    numerics::Engine rng_;
    std::normal_distribution<double> normal_;
    double scatter_weight_ = 0.0;
    std::vector<std::complex<double>> los_;
    std::vector<std::vector<std::complex<double>>> paths_;
    std::vector<std::complex<double>> h_;
};

inline std::vector<ChannelRealization> generate_rice_channel(const PortGrid& grid, const RiceChannelParams& params,
                                                             std::size_t count, std::uint64_t seed) {
    RiceChannelGenerator gen(grid, params, seed);
    std::vector<ChannelRealization> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(gen.next());
    return out;
}

}  // namespace fasrsma::channel
