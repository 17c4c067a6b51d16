#pragma once

// Downlink RSMA with fluid-antenna receivers: geometry and path loss, the
// common- and private-stream SINRs at the best port, the equivalent gain
// thresholds they induce, and the outage probability with its high-SNR
// asymptote.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fasrsma/channel.hpp"
#include "fasrsma/copula.hpp"
#include "fasrsma/errors.hpp"
#include "fasrsma/numerics/mvt.hpp"

namespace fasrsma::rsma {

using numerics::MvtResult;
using numerics::MvtSettings;

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

/// Average transmit SNR P / sigma^2. Stored linear; constructed from either
/// scale so call sites state which one they hold.
class Snr {
public:
    static Snr from_db(double db) { return Snr(db_to_linear(db)); }
    static Snr from_linear(double linear) { return Snr(linear); }

    double linear() const noexcept { return linear_; }
    double db() const { return linear_to_db(linear_); }

private:
    explicit Snr(double linear) : linear_(linear) {}
    double linear_;
};

struct UserConfig {
    Position position;
    channel::PortGrid grid;
    double nu = 40.0;          ///< t-copula degrees of freedom
    double alpha_p = 0.0;      ///< private power share
    double gamma_th_c = 1.0;   ///< common-stream SINR threshold (linear)
    double gamma_th_p = 1.0;   ///< private-stream SINR threshold (linear)

    friend bool operator==(const UserConfig&, const UserConfig&) = default;
};

struct SystemConfig {
    Position bs_position;
    double path_loss_exp = 2.1;
    double alpha_c = 0.7;
    std::vector<UserConfig> users;
    double mean_gain = 1.0;  ///< mean small-scale fading gain, excluding path loss

    /// Checks every model invariant; the message names the offending field.
    void validate() const {
        auto fail = [](const std::string& msg) { throw DomainError("SystemConfig: " + msg); };
        if (!(path_loss_exp > 2.0) || !std::isfinite(path_loss_exp)) fail("path_loss_exp must exceed 2");
        if (!(alpha_c > 0.0 && alpha_c < 1.0)) fail("alpha_c must lie in (0, 1)");
        if (!(mean_gain > 0.0) || !std::isfinite(mean_gain)) fail("mean_gain must be positive");
        if (users.empty()) fail("at least one user is required");
        double total = alpha_c;
        for (std::size_t k = 0; k < users.size(); ++k) {
            const auto& u = users[k];
            const std::string where = "users[" + std::to_string(k) + "].";
            if (!(u.alpha_p > 0.0)) fail(where + "alpha_p must be positive");
            if (!(u.gamma_th_c > 0.0) || !std::isfinite(u.gamma_th_c)) fail(where + "gamma_th_c must be positive");
            if (!(u.gamma_th_p > 0.0) || !std::isfinite(u.gamma_th_p)) fail(where + "gamma_th_p must be positive");
            if (!(u.nu > 0.0)) fail(where + "nu must be positive");
            try {
                u.grid.validate();
            } catch (const DomainError& e) {
                fail(where + "grid: " + e.what());
            }
            if (distance(u.position, bs_position) == 0.0) fail(where + "position coincides with the base station");
            total += u.alpha_p;
        }
        if (std::fabs(total - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "alpha_c + sum(alpha_p) must equal 1 (got " << total << ")";
            fail(os.str());
        }
    }

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// L = d^-beta.
inline double path_loss(const SystemConfig& cfg, const UserConfig& user) {
    const double d = distance(cfg.bs_position, user.position);
    if (!(d > 0.0)) throw DomainError("path_loss: user coincides with the base station");
    return std::pow(d, -cfg.path_loss_exp);
}

/// SINR of the common stream, all private streams treated as noise.
inline double sinr_common(double gain, Snr snr, double alpha_c, double path_loss_value) {
    const double s = snr.linear() * path_loss_value * gain;
    return s * alpha_c / (s * (1.0 - alpha_c) + 1.0);
}

/// SINR of user k's private stream after the common stream is removed; the
/// other users' private streams remain as interference.
inline double sinr_private(double gain, Snr snr, const SystemConfig& cfg, std::size_t user_index) {
    if (user_index >= cfg.users.size()) throw DomainError("sinr_private: user index out of range");
    double interference_share = 0.0;
    for (std::size_t j = 0; j < cfg.users.size(); ++j) {
        if (j != user_index) interference_share += cfg.users[j].alpha_p;
    }
    const double s = snr.linear() * path_loss(cfg, cfg.users[user_index]) * gain;
    return s * cfg.users[user_index].alpha_p / (s * interference_share + 1.0);
}

/// Gain thresholds induced by the two decoding stages. An empty part means
/// that stage's SINR ceiling never reaches its threshold.
struct EffectiveThreshold {
    std::optional<double> common_part;
    std::optional<double> private_part;

    bool feasible() const noexcept { return common_part.has_value() && private_part.has_value(); }

    /// max(common_part, private_part), or nullopt when outage is certain.
    std::optional<double> value() const {
        if (!feasible()) return std::nullopt;
        return std::max(*common_part, *private_part);
    }
};

inline EffectiveThreshold effective_threshold(const SystemConfig& cfg, std::size_t user_index, Snr snr) {
    if (user_index >= cfg.users.size()) throw DomainError("effective_threshold: user index out of range");
    if (!(snr.linear() > 0.0)) throw DomainError("effective_threshold: SNR must be positive");
    const auto& user = cfg.users[user_index];
    const double scale = snr.linear() * path_loss(cfg, user);
    EffectiveThreshold out;
    const double common_den = cfg.alpha_c - (1.0 - cfg.alpha_c) * user.gamma_th_c;
    if (common_den > 0.0) out.common_part = user.gamma_th_c / (scale * common_den);
    const double private_den = user.alpha_p - (1.0 - cfg.alpha_c - user.alpha_p) * user.gamma_th_p;
    if (private_den > 0.0) out.private_part = user.gamma_th_p / (scale * private_den);
    return out;
}

/// t-copula of user k's port gains: Jakes correlation of its grid, nu_k.
inline copula::CopulaSpec user_copula(const SystemConfig& cfg, std::size_t user_index) {
    const auto& user = cfg.users.at(user_index);
    return {copula::CopulaFamily::student_t, channel::build_correlation_matrix(user.grid), user.nu};
}

/// P(max-port gain <= threshold): exactly 1 when the threshold is infeasible.
inline MvtResult outage_probability(const SystemConfig& cfg, std::size_t user_index, Snr snr,
                                    const MvtSettings& settings = {}) {
    const auto threshold = effective_threshold(cfg, user_index, snr).value();
    if (!threshold) return {1.0, 0.0};
    return copula::fas_gain_cdf(*threshold, user_copula(cfg, user_index), cfg.mean_gain, settings);
}

/// High-SNR outage: the exponential marginal 1 - exp(-x) replaced by x.
/// Requires x = threshold / mean_gain < 1; infeasible thresholds give 1.
inline MvtResult asymptotic_outage(const SystemConfig& cfg, std::size_t user_index, Snr snr,
                                   const MvtSettings& settings = {}) {
    const auto threshold = effective_threshold(cfg, user_index, snr).value();
    if (!threshold) return {1.0, 0.0};
    const double x = *threshold / cfg.mean_gain;
    if (!(x < 1.0)) {
        std::ostringstream os;
        os << "asymptotic_outage: threshold / mean_gain = " << x << " >= 1, the asymptote is not valid at "
           << snr.db() << " dB";
        throw DomainError(os.str());
    }
    const auto spec = user_copula(cfg, user_index);
    const std::vector<double> u(spec.dim(), x);
    return copula::copula_cdf(u, spec, settings);
}

}  // namespace fasrsma::rsma
