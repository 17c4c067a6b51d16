#pragma once

// Monte-Carlo outage estimators and the scheme sweep behind the OP-vs-SNR
// tables: FAS/TAS receivers under RSMA, plus a two-user power-domain NOMA
// benchmark.
//
// Every estimator splits its samples into fixed-size batches whose random
// streams are derived from (seed, batch index). Counts are integers, so the
// aggregate does not depend on how batches are scheduled.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fasrsma/channel.hpp"
#include "fasrsma/copula.hpp"
#include "fasrsma/errors.hpp"
#include "fasrsma/numerics/mvt.hpp"
#include "fasrsma/numerics/special.hpp"
#include "fasrsma/rsma.hpp"

namespace fasrsma::sim {

using rsma::Snr;
using rsma::SystemConfig;

enum class Scheme { fas_rsma, tas_rsma, fas_noma, tas_noma };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::fas_rsma: return "fas_rsma";
        case Scheme::tas_rsma: return "tas_rsma";
        case Scheme::fas_noma: return "fas_noma";
        case Scheme::tas_noma: return "tas_noma";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& name) {
    for (Scheme s : {Scheme::fas_rsma, Scheme::tas_rsma, Scheme::fas_noma, Scheme::tas_noma}) {
        if (name == to_string(s)) return s;
    }
    return std::nullopt;
}

inline bool is_rsma(Scheme s) { return s == Scheme::fas_rsma || s == Scheme::tas_rsma; }
inline bool is_fas(Scheme s) { return s == Scheme::fas_rsma || s == Scheme::fas_noma; }

/// Which channel model drives the RSMA Monte-Carlo estimate.
enum class McModel { copula, physical };

struct McSettings {
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 1;
    std::size_t batch = 1u << 16;
    McModel model = McModel::copula;

    void validate() const {
        fasrsma::detail::require(samples >= 1000, "McSettings: samples must be >= 1000");
        fasrsma::detail::require(batch >= 1, "McSettings: batch must be positive");
    }
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
            successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

struct OutageResult {
    Scheme scheme = Scheme::fas_rsma;
    std::size_t user = 0;
    double snr_db = 0.0;
    std::optional<double> analytic;
    std::optional<double> analytic_stderr;
    std::optional<double> asymptotic;
    double mc_estimate = 0.0;
    Interval mc_ci95;
    std::size_t samples = 0;
    std::vector<std::string> flags;
};

/// Outage counts of MC estimators below this OP are flagged as unreliable.
inline constexpr double kRareEventFloor = 1e-5;

namespace detail {

// Runs `count_batch(batch_index, batch_size)` over all batches and sums the
// outage counts.
inline std::size_t count_batches(const McSettings& mc,
                                 const std::function<std::size_t(std::size_t, std::size_t)>& count_batch) {
    std::size_t outages = 0;
    for (std::size_t start = 0, b = 0; start < mc.samples; start += mc.batch, ++b) {
        outages += count_batch(b, std::min(mc.batch, mc.samples - start));
    }
    return outages;
}

inline OutageResult make_result(std::size_t user, Snr snr, std::size_t outages, const McSettings& mc) {
    OutageResult r;
    r.user = user;
    r.snr_db = snr.db();
    r.samples = mc.samples;
    r.mc_estimate = static_cast<double>(outages) / static_cast<double>(mc.samples);
    r.mc_ci95 = wilson_interval(outages, mc.samples);
    return r;
}

inline bool rsma_outage(double gain, Snr snr, const SystemConfig& cfg, std::size_t k, double path_loss_value) {
    const auto& user = cfg.users[k];
    return rsma::sinr_common(gain, snr, cfg.alpha_c, path_loss_value) < user.gamma_th_c ||
           rsma::sinr_private(gain, snr, cfg, k) < user.gamma_th_p;
}

inline SystemConfig with_single_port(SystemConfig cfg) {
    for (auto& u : cfg.users) u.grid = channel::PortGrid{1, 1, 0.0, 0.0};
    return cfg;
}

}  // namespace detail

/// Outage of user k estimated by sampling its t-copula: the best port's
/// latent value is mapped through the t marginal CDF and the inverse
/// exponential marginal into a gain, and both SINR stages are tested.
inline OutageResult mc_outage_copula(const SystemConfig& cfg, std::size_t k, Snr snr, const McSettings& mc) {
    cfg.validate();
    mc.validate();
    if (k >= cfg.users.size()) throw DomainError("mc_outage_copula: user index out of range");
    const auto spec = rsma::user_copula(cfg, k);
    const double pl = rsma::path_loss(cfg, cfg.users[k]);
    const std::size_t n = spec.dim();
    const auto outages = detail::count_batches(mc, [&](std::size_t b, std::size_t size) {
        copula::CopulaSampler sampler(spec, mc.seed, b);
        std::vector<double> latent(n);
        std::size_t count = 0;
        for (std::size_t i = 0; i < size; ++i) {
            sampler.fill_latent(latent);
            // The marginal maps are increasing, so the best port is the one
            // with the largest latent value.
            const double best = *std::max_element(latent.begin(), latent.end());
            const double u = std::min(numerics::student_t_cdf(best, spec.nu), 1.0 - copula::kUniformClamp);
            const double gain = -cfg.mean_gain * std::log1p(-u);
            if (detail::rsma_outage(gain, snr, cfg, k, pl)) ++count;
        }
        return count;
    });
    auto r = detail::make_result(k, snr, outages, mc);
    r.scheme = cfg.users[k].grid.total_ports() > 1 ? Scheme::fas_rsma : Scheme::tas_rsma;
    return r;
}

/// Outage of user k on the physical channel: Rayleigh port gains with the
/// Jakes correlation, best port selected, SINR stages tested directly.
inline OutageResult mc_outage_physical(const SystemConfig& cfg, std::size_t k, Snr snr, const McSettings& mc) {
    cfg.validate();
    mc.validate();
    if (k >= cfg.users.size()) throw DomainError("mc_outage_physical: user index out of range");
    const auto sigma = channel::build_correlation_matrix(cfg.users[k].grid);
    const double pl = rsma::path_loss(cfg, cfg.users[k]);
    const auto outages = detail::count_batches(mc, [&](std::size_t b, std::size_t size) {
        channel::RayleighGainGenerator gen(sigma, cfg.mean_gain, mc.seed, b);
        std::vector<double> gains(gen.dim());
        std::size_t count = 0;
        for (std::size_t i = 0; i < size; ++i) {
            gen.fill(gains);
            const double best = *std::max_element(gains.begin(), gains.end());
            if (detail::rsma_outage(best, snr, cfg, k, pl)) ++count;
        }
        return count;
    });
    auto r = detail::make_result(k, snr, outages, mc);
    r.scheme = cfg.users[k].grid.total_ports() > 1 ? Scheme::fas_rsma : Scheme::tas_rsma;
    return r;
}

/// Two-user downlink NOMA benchmark. Power shares are the private shares
/// renormalized to sum to one. The user with the larger path-loss gain is
/// the strong user and runs SIC: it must decode the weak user's message
/// (threshold of the weak user) and then its own. The weak user decodes its
/// own message with the strong user's signal as interference. Each user's
/// data threshold is its private-stream threshold. Gains come from the
/// user's t-copula; `fas = false` evaluates a single-port receiver.
inline OutageResult mc_outage_noma(const SystemConfig& cfg, std::size_t k, Snr snr, const McSettings& mc, bool fas) {
    cfg.validate();
    mc.validate();
    if (cfg.users.size() != 2) throw UnsupportedConfiguration("mc_outage_noma: the NOMA benchmark requires exactly two users");
    if (k >= 2) throw DomainError("mc_outage_noma: user index out of range");
    const SystemConfig model = fas ? cfg : detail::with_single_port(cfg);
    const std::size_t other = 1 - k;
    const double share_total = cfg.users[0].alpha_p + cfg.users[1].alpha_p;
    const double own_share = cfg.users[k].alpha_p / share_total;
    const double other_share = cfg.users[other].alpha_p / share_total;
    const double pl = rsma::path_loss(cfg, cfg.users[k]);
    const bool strong = pl > rsma::path_loss(cfg, cfg.users[other]) ||
                        (pl == rsma::path_loss(cfg, cfg.users[other]) && k == 0);
    const double own_th = cfg.users[k].gamma_th_p;
    const double other_th = cfg.users[other].gamma_th_p;

    const auto spec = rsma::user_copula(model, k);
    const std::size_t n = spec.dim();
    const auto outages = detail::count_batches(mc, [&](std::size_t b, std::size_t size) {
        copula::CopulaSampler sampler(spec, mc.seed, b);
        std::vector<double> latent(n);
        std::size_t count = 0;
        for (std::size_t i = 0; i < size; ++i) {
            sampler.fill_latent(latent);
            const double best = *std::max_element(latent.begin(), latent.end());
            const double u = std::min(numerics::student_t_cdf(best, spec.nu), 1.0 - copula::kUniformClamp);
            const double s = snr.linear() * pl * (-cfg.mean_gain * std::log1p(-u));
            bool outage;
            if (strong) {
                const double sic = s * other_share / (s * own_share + 1.0);
                outage = sic < other_th || s * own_share < own_th;
            } else {
                outage = s * own_share / (s * other_share + 1.0) < own_th;
            }
            if (outage) ++count;
        }
        return count;
    });
    auto r = detail::make_result(k, snr, outages, mc);
    r.scheme = fas ? Scheme::fas_noma : Scheme::tas_noma;
    return r;
}

struct SweepSettings {
    numerics::MvtSettings mvt;
    McSettings mc;
    bool run_mc = true;
    std::size_t threads = 1;
};

/// One OutageResult per (scheme, user, SNR), ordered in that nesting. A
/// failing point is returned with an "error:" flag instead of aborting.
inline std::vector<OutageResult> run_sweep(const SystemConfig& cfg, const std::vector<Scheme>& schemes,
                                           const std::vector<double>& snr_grid_db, const SweepSettings& settings) {
    fasrsma::detail::require(!snr_grid_db.empty(), "run_sweep: SNR grid is empty");
    fasrsma::detail::require(!schemes.empty(), "run_sweep: scheme list is empty");
    cfg.validate();
    settings.mvt.validate();
    settings.mc.validate();

    struct Task {
        Scheme scheme;
        std::size_t user;
        double snr_db;
    };
    std::vector<Task> tasks;
    for (Scheme s : schemes) {
        for (std::size_t k = 0; k < cfg.users.size(); ++k) {
            for (double db : snr_grid_db) tasks.push_back({s, k, db});
        }
    }
    const SystemConfig tas_cfg = detail::with_single_port(cfg);

    auto evaluate = [&](const Task& t) {
        OutageResult r;
        r.scheme = t.scheme;
        r.user = t.user;
        r.snr_db = t.snr_db;
        try {
            const Snr snr = Snr::from_db(t.snr_db);
            const SystemConfig& model = is_fas(t.scheme) ? cfg : tas_cfg;
            if (is_rsma(t.scheme)) {
                const auto exact = rsma::outage_probability(model, t.user, snr, settings.mvt);
                r.analytic = exact.value;
                r.analytic_stderr = exact.std_error;
                try {
                    r.asymptotic = rsma::asymptotic_outage(model, t.user, snr, settings.mvt).value;
                } catch (const DomainError&) {
                    r.flags.emplace_back("asymptote_invalid");
                }
                if (!rsma::effective_threshold(model, t.user, snr).feasible()) r.flags.emplace_back("infeasible_threshold");
            }
            if (settings.run_mc) {
                OutageResult mc;
                if (is_rsma(t.scheme)) {
                    mc = settings.mc.model == McModel::copula ? mc_outage_copula(model, t.user, snr, settings.mc)
                                                              : mc_outage_physical(model, t.user, snr, settings.mc);
                } else {
                    mc = mc_outage_noma(cfg, t.user, snr, settings.mc, is_fas(t.scheme));
                }
                r.mc_estimate = mc.mc_estimate;
                r.mc_ci95 = mc.mc_ci95;
                r.samples = mc.samples;
                const double reference = r.analytic.value_or(r.mc_estimate);
                if (reference < kRareEventFloor) r.flags.emplace_back("insufficient_samples");
            }
        } catch (const std::exception& e) {
            r.flags.push_back(std::string("error: ") + e.what());
        }
        return r;
    };

    std::vector<OutageResult> results(tasks.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min(settings.threads, tasks.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = evaluate(tasks[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) results[i] = evaluate(tasks[i]);
            });
        }
        for (auto& t : pool) t.join();
    }
    return results;
}

}  // namespace fasrsma::sim
