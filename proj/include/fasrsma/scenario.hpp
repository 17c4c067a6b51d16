#pragma once

// Scenario files: a strict JSON schema holding the system, the users, the
// schemes to compare, the SNR grid and the numerical settings. Also the
// writers for the result table and run manifest, and the dry-run report.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fasrsma/channel.hpp"
#include "fasrsma/errors.hpp"
#include "fasrsma/numerics/mvt.hpp"
#include "fasrsma/rsma.hpp"
#include "fasrsma/sim.hpp"

namespace fasrsma::scenario {

inline constexpr const char* kVersion = "1.0.0";

/// The file is not valid JSON or could not be read.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The document does not match the schema or violates a model invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SnrGrid {
    double start_db = 0.0;
    double stop_db = 60.0;
    double step_db = 2.0;

    /// Inclusive of both endpoints; points are start + i * step.
    std::vector<double> points() const {
        std::vector<double> out;
        const auto count = static_cast<std::size_t>(std::floor((stop_db - start_db) / step_db + 1e-9)) + 1;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) out.push_back(start_db + static_cast<double>(i) * step_db);
        return out;
    }

    friend bool operator==(const SnrGrid&, const SnrGrid&) = default;
};

struct Scenario {
    rsma::SystemConfig system;
    std::vector<sim::Scheme> schemes;
    SnrGrid snr;
    numerics::MvtSettings mvt;
    sim::McSettings mc;
    bool mc_enabled = true;
    std::string output = "results";
    /// Per-user (common, private) thresholds as written in the file, in dB.
    std::vector<std::pair<double, double>> thresholds_db;

    friend bool operator==(const Scenario& a, const Scenario& b) {
        return a.system == b.system && a.schemes == b.schemes && a.snr == b.snr &&
               a.mvt.qmc_points == b.mvt.qmc_points && a.mvt.shifts == b.mvt.shifts &&
               a.mvt.error_target == b.mvt.error_target && a.mvt.jitter == b.mvt.jitter &&
               a.mvt.seed == b.mvt.seed && a.mc.samples == b.mc.samples && a.mc.seed == b.mc.seed &&
               a.mc.batch == b.mc.batch && a.mc.model == b.mc.model && a.mc_enabled == b.mc_enabled &&
               a.output == b.output && a.thresholds_db == b.thresholds_db;
    }
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            schema_error(path.empty() ? key : path + "." + key, "unknown key");
        }
    }
}

inline const json& field(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) schema_error(path.empty() ? key : path + "." + key, "missing required key");
    return obj.at(key);
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline double number(const json& obj, const std::string& path, const char* key) {
    const auto& v = field(obj, path, key);
    if (!v.is_number()) schema_error(join(path, key), "expected a number");
    return v.get<double>();
}

inline double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
    return obj.contains(key) ? number(obj, path, key) : fallback;
}

inline std::uint64_t count(const json& obj, const std::string& path, const char* key) {
    const auto& v = field(obj, path, key);
    if (!v.is_number_unsigned()) schema_error(join(path, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::uint64_t count_or(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
    return obj.contains(key) ? count(obj, path, key) : fallback;
}

inline rsma::Position position(const json& obj, const std::string& path, const char* key) {
    const auto& v = field(obj, path, key);
    if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
        schema_error(join(path, key), "expected [x, y, z] in meters");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline json to_json(const rsma::Position& p) { return json::array({p.x, p.y, p.z}); }

}  // namespace detail

/// Build a Scenario from a parsed document, rejecting unknown keys and
/// re-validating every model invariant. Errors name the offending key.
inline Scenario from_json(const nlohmann::json& doc) {
    using namespace detail;
    reject_unknown(doc, "", {"system", "users", "schemes", "snr_db", "mvt", "mc", "output"});
    Scenario s;

    const auto& sys = field(doc, "", "system");
    reject_unknown(sys, "system", {"bs_position", "path_loss_exp", "alpha_c", "mean_gain"});
    s.system.bs_position = position(sys, "system", "bs_position");
    s.system.path_loss_exp = number(sys, "system", "path_loss_exp");
    s.system.alpha_c = number(sys, "system", "alpha_c");
    s.system.mean_gain = number_or(sys, "system", "mean_gain", 1.0);

    const auto& users = field(doc, "", "users");
    if (!users.is_array()) schema_error("users", "expected an array");
    if (users.empty()) schema_error("users", "at least one user is required");
    for (std::size_t k = 0; k < users.size(); ++k) {
        const std::string path = "users[" + std::to_string(k) + "]";
        const auto& u = users[k];
        reject_unknown(u, path, {"position", "grid", "nu", "alpha_p", "gamma_th_c_db", "gamma_th_p_db"});
        rsma::UserConfig user;
        user.position = position(u, path, "position");
        const auto& grid = field(u, path, "grid");
        const std::string grid_path = path + ".grid";
        reject_unknown(grid, grid_path, {"n1", "n2", "w1", "w2"});
        user.grid.n1 = count(grid, grid_path, "n1");
        user.grid.n2 = count(grid, grid_path, "n2");
        user.grid.w1 = number(grid, grid_path, "w1");
        user.grid.w2 = number(grid, grid_path, "w2");
        user.nu = number(u, path, "nu");
        user.alpha_p = number(u, path, "alpha_p");
        const double th_c_db = number(u, path, "gamma_th_c_db");
        const double th_p_db = number(u, path, "gamma_th_p_db");
        user.gamma_th_c = rsma::db_to_linear(th_c_db);
        user.gamma_th_p = rsma::db_to_linear(th_p_db);
        s.system.users.push_back(user);
        s.thresholds_db.emplace_back(th_c_db, th_p_db);
    }

    const auto& schemes = field(doc, "", "schemes");
    if (!schemes.is_array() || schemes.empty()) schema_error("schemes", "expected a non-empty array");
    for (std::size_t i = 0; i < schemes.size(); ++i) {
        const std::string path = "schemes[" + std::to_string(i) + "]";
        if (!schemes[i].is_string()) schema_error(path, "expected a scheme name");
        const auto parsed = sim::parse_scheme(schemes[i].get<std::string>());
        if (!parsed) schema_error(path, "unknown scheme '" + schemes[i].get<std::string>() +
                                            "' (fas_rsma, tas_rsma, fas_noma, tas_noma)");
        if (std::find(s.schemes.begin(), s.schemes.end(), *parsed) != s.schemes.end()) {
            schema_error(path, "duplicate scheme");
        }
        s.schemes.push_back(*parsed);
    }

    const auto& grid = field(doc, "", "snr_db");
    reject_unknown(grid, "snr_db", {"start", "stop", "step"});
    s.snr.start_db = number(grid, "snr_db", "start");
    s.snr.stop_db = number(grid, "snr_db", "stop");
    s.snr.step_db = number(grid, "snr_db", "step");
    if (!(s.snr.step_db > 0.0)) schema_error("snr_db.step", "must be positive");
    if (!(s.snr.stop_db >= s.snr.start_db)) schema_error("snr_db.stop", "must not be below snr_db.start");

    if (doc.contains("mvt")) {
        const auto& m = doc.at("mvt");
        reject_unknown(m, "mvt", {"qmc_points", "shifts", "error_target", "jitter", "seed"});
        s.mvt.qmc_points = count_or(m, "mvt", "qmc_points", s.mvt.qmc_points);
        s.mvt.shifts = count_or(m, "mvt", "shifts", s.mvt.shifts);
        s.mvt.error_target = number_or(m, "mvt", "error_target", s.mvt.error_target);
        s.mvt.jitter = number_or(m, "mvt", "jitter", s.mvt.jitter);
        s.mvt.seed = count_or(m, "mvt", "seed", s.mvt.seed);
    }
    if (doc.contains("mc")) {
        const auto& m = doc.at("mc");
        reject_unknown(m, "mc", {"enabled", "samples", "seed", "batch", "model"});
        if (m.contains("enabled")) {
            if (!m.at("enabled").is_boolean()) schema_error("mc.enabled", "expected true or false");
            s.mc_enabled = m.at("enabled").get<bool>();
        }
        s.mc.samples = count_or(m, "mc", "samples", s.mc.samples);
        s.mc.seed = count_or(m, "mc", "seed", s.mc.seed);
        s.mc.batch = count_or(m, "mc", "batch", s.mc.batch);
        if (m.contains("model")) {
            const auto& model = m.at("model");
            if (model == "copula") s.mc.model = sim::McModel::copula;
            else if (model == "physical") s.mc.model = sim::McModel::physical;
            else schema_error("mc.model", "expected \"copula\" or \"physical\"");
        }
    }
    if (doc.contains("output")) {
        if (!doc.at("output").is_string()) schema_error("output", "expected a path string");
        s.output = doc.at("output").get<std::string>();
    }

    auto recheck = [](const char* path, auto&& fn) {
        try {
            fn();
        } catch (const DomainError& e) {
            schema_error(path, e.what());
        }
    };
    recheck("system", [&] { s.system.validate(); });
    recheck("mvt", [&] { s.mvt.validate(); });
    recheck("mc", [&] { s.mc.validate(); });
    return s;
}

inline nlohmann::json to_json(const Scenario& s) {
    using nlohmann::json;
    json users = json::array();
    for (std::size_t k = 0; k < s.system.users.size(); ++k) {
        const auto& u = s.system.users[k];
        const auto th_db = k < s.thresholds_db.size()
                               ? s.thresholds_db[k]
                               : std::pair{rsma::linear_to_db(u.gamma_th_c), rsma::linear_to_db(u.gamma_th_p)};
        users.push_back({{"position", detail::to_json(u.position)},
                         {"grid", {{"n1", u.grid.n1}, {"n2", u.grid.n2}, {"w1", u.grid.w1}, {"w2", u.grid.w2}}},
                         {"nu", u.nu},
                         {"alpha_p", u.alpha_p},
                         {"gamma_th_c_db", th_db.first},
                         {"gamma_th_p_db", th_db.second}});
    }
    json schemes = json::array();
    for (auto sc : s.schemes) schemes.push_back(sim::to_string(sc));
    return {{"system",
             {{"bs_position", detail::to_json(s.system.bs_position)},
              {"path_loss_exp", s.system.path_loss_exp},
              {"alpha_c", s.system.alpha_c},
              {"mean_gain", s.system.mean_gain}}},
            {"users", users},
            {"schemes", schemes},
            {"snr_db", {{"start", s.snr.start_db}, {"stop", s.snr.stop_db}, {"step", s.snr.step_db}}},
            {"mvt",
             {{"qmc_points", s.mvt.qmc_points},
              {"shifts", s.mvt.shifts},
              {"error_target", s.mvt.error_target},
              {"jitter", s.mvt.jitter},
              {"seed", s.mvt.seed}}},
            {"mc",
             {{"enabled", s.mc_enabled},
              {"samples", s.mc.samples},
              {"seed", s.mc.seed},
              {"batch", s.mc.batch},
              {"model", s.mc.model == sim::McModel::copula ? "copula" : "physical"}}},
            {"output", s.output}};
}

inline Scenario parse_scenario(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
    }
    try {
        return from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario schema violation: ") + e.what());
    }
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline constexpr const char* kTableHeader =
    "scheme,user,snr_db,analytic_op,analytic_stderr,asymptotic_op,mc_op,mc_ci_lo,mc_ci_hi,samples,flags";

/// Comma-separated result table, rows sorted by (scheme name, user, SNR).
/// Users are numbered from 1; absent values are empty fields; flags are
/// joined with ';'.
inline std::string format_table(std::vector<sim::OutageResult> rows, bool with_mc = true) {
    std::stable_sort(rows.begin(), rows.end(), [](const sim::OutageResult& a, const sim::OutageResult& b) {
        const std::string sa = sim::to_string(a.scheme);
        const std::string sb = sim::to_string(b.scheme);
        if (sa != sb) return sa < sb;
        if (a.user != b.user) return a.user < b.user;
        return a.snr_db < b.snr_db;
    });
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    std::string out = std::string(kTableHeader) + "\n";
    for (const auto& r : rows) {
        std::string flags;
        for (const auto& f : r.flags) {
            if (!flags.empty()) flags += ';';
            std::string clean = f;
            std::replace_if(clean.begin(), clean.end(), [](char c) { return c == ',' || c == '\n' || c == ';'; }, ' ');
            flags += clean;
        }
        out += sim::to_string(r.scheme);
        out += ',' + std::to_string(r.user + 1);
        out += ',' + format_number(r.snr_db);
        out += ',' + opt(r.analytic);
        out += ',' + opt(r.analytic_stderr);
        out += ',' + opt(r.asymptotic);
        if (with_mc) {
            out += ',' + format_number(r.mc_estimate);
            out += ',' + format_number(r.mc_ci95.lo);
            out += ',' + format_number(r.mc_ci95.hi);
            out += ',' + std::to_string(r.samples);
        } else {
            out += ",,,,0";
        }
        out += ',' + flags + '\n';
    }
    return out;
}

inline nlohmann::json manifest(const Scenario& s, const std::string& scenario_path, std::size_t threads) {
    return {{"software", "fasrsma"},
            {"version", kVersion},
            {"scenario_path", scenario_path},
            {"mvt_seed", s.mvt.seed},
            {"mc_seed", s.mc.seed},
            {"threads", threads},
            {"scenario", to_json(s)}};
}

struct ValidationReport {
    std::vector<std::string> problems;
    std::vector<std::string> notes;
    bool clean() const noexcept { return problems.empty(); }
};

/// Dry run: threshold feasibility at the highest SNR of the sweep, applied
/// jitter of each user's correlation matrix, and a runtime estimate from a
/// short timing probe.
inline ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport report;
    const auto snrs = s.snr.points();
    const rsma::Snr top = rsma::Snr::from_db(snrs.back());
    for (std::size_t k = 0; k < s.system.users.size(); ++k) {
        const std::string who = "users[" + std::to_string(k) + "]";
        const auto th = rsma::effective_threshold(s.system, k, top);
        if (!th.common_part) report.problems.push_back(who + ": common threshold infeasible at all SNR");
        if (!th.private_part) report.problems.push_back(who + ": private threshold infeasible at all SNR");
        try {
            const auto sigma = channel::build_correlation_matrix(s.system.users[k].grid);
            std::ostringstream os;
            os << who << ": " << sigma.dim() << " ports, applied jitter " << sigma.applied_jitter;
            report.notes.push_back(os.str());
        } catch (const SingularMatrixError& e) {
            report.problems.push_back(who + ": " + e.what());
        }
    }
    const bool noma = std::any_of(s.schemes.begin(), s.schemes.end(), [](sim::Scheme sc) { return !sim::is_rsma(sc); });
    if (noma && s.system.users.size() != 2) report.problems.push_back("NOMA schemes require exactly two users");

    // Timing probe: one analytic point and a small Monte-Carlo batch.
    using clock = std::chrono::steady_clock;
    double analytic_seconds = 0.0;
    double mc_seconds_per_sample = 0.0;
    try {
        auto t0 = clock::now();
        (void)rsma::outage_probability(s.system, 0, rsma::Snr::from_db(snrs[snrs.size() / 2]), s.mvt);
        analytic_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        sim::McSettings probe = s.mc;
        probe.samples = 20000;
        t0 = clock::now();
        (void)sim::mc_outage_copula(s.system, 0, rsma::Snr::from_db(snrs[snrs.size() / 2]), probe);
        mc_seconds_per_sample = std::chrono::duration<double>(clock::now() - t0).count() / 20000.0;
    } catch (const std::exception& e) {
        report.problems.push_back(std::string("timing probe failed: ") + e.what());
    }
    const double points = static_cast<double>(s.schemes.size() * s.system.users.size() * snrs.size());
    const double estimate = points * (2.0 * analytic_seconds +
                                      (s.mc_enabled ? mc_seconds_per_sample * static_cast<double>(s.mc.samples) : 0.0));
    std::ostringstream os;
    os << "estimated single-thread runtime: " << format_number(estimate) << " s for " << points << " sweep points";
    report.notes.push_back(os.str());
    return report;
}

}  // namespace fasrsma::scenario
