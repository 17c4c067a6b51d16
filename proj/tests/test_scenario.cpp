#include <string>

#include <gtest/gtest.h>

#include "fasrsma/scenario.hpp"

using namespace fasrsma;
using namespace fasrsma::scenario;

namespace {

std::string paper_path() { return std::string(FASRSMA_SCENARIO_DIR) + "/paper_fig1a.scenario"; }

// Minimal valid document; tests patch fields into it.
nlohmann::json base_doc() {
    return nlohmann::json::parse(R"({
      "system": {"bs_position": [0, 0, 0], "path_loss_exp": 2.1, "alpha_c": 0.7},
      "users": [
        {"position": [50, 50, 0], "grid": {"n1": 2, "n2": 2, "w1": 1, "w2": 1},
         "nu": 40, "alpha_p": 0.225, "gamma_th_c_db": 0, "gamma_th_p_db": 0},
        {"position": [10, 50, 0], "grid": {"n1": 2, "n2": 2, "w1": 1, "w2": 1},
         "nu": 40, "alpha_p": 0.075, "gamma_th_c_db": 0, "gamma_th_p_db": 0}
      ],
      "schemes": ["fas_rsma"],
      "snr_db": {"start": 40, "stop": 50, "step": 5}
    })");
}

void expect_rejected(const nlohmann::json& doc, const std::string& fragment) {
    try {
        parse_scenario(doc.dump());
        FAIL() << "accepted a document that should fail on " << fragment;
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

}  // namespace

TEST(SnrGrid, InclusiveEndpoints) {
    EXPECT_EQ((SnrGrid{0, 60, 2}.points().size()), 31u);
    EXPECT_EQ((SnrGrid{0, 60, 2}.points().back()), 60.0);
    EXPECT_EQ((SnrGrid{50, 50, 1}.points()), std::vector<double>{50.0});
    EXPECT_EQ((SnrGrid{0, 1, 0.1}.points().size()), 11u);
}

TEST(LoadScenario, PaperFile) {
    const auto s = load_scenario(paper_path());
    ASSERT_EQ(s.system.users.size(), 2u);
    EXPECT_EQ(s.system.users[0].position, (rsma::Position{50, 50, 0}));
    EXPECT_EQ(s.system.users[1].position, (rsma::Position{10, 50, 0}));
    EXPECT_EQ(s.system.alpha_c, 0.7);
    EXPECT_EQ(s.system.path_loss_exp, 2.1);
    EXPECT_EQ(s.system.users[0].alpha_p, 0.225);
    EXPECT_EQ(s.system.users[1].alpha_p, 0.075);
    EXPECT_EQ(s.system.users[0].gamma_th_c, 1.0);
    EXPECT_EQ(s.system.users[0].grid, (channel::PortGrid{2, 2, 1.0, 1.0}));
    EXPECT_EQ(s.schemes.size(), 4u);
    EXPECT_EQ(s.snr.points().size(), 31u);
}

TEST(LoadScenario, Rejections) {
    auto doc = base_doc();
    doc["users"][0]["alpha_p"] = 0.3;
    doc["users"][1]["alpha_p"] = 0.2;
    expect_rejected(doc, "alpha_c + sum(alpha_p) must equal 1");

    doc = base_doc();
    doc["users"] = nlohmann::json::array();
    expect_rejected(doc, "users");

    doc = base_doc();
    doc["users"][1]["alpah_p"] = 0.1;
    expect_rejected(doc, "users[1].alpah_p: unknown key");

    doc = base_doc();
    doc["system"].erase("alpha_c");
    expect_rejected(doc, "system.alpha_c: missing required key");

    doc = base_doc();
    doc["schemes"] = {"fas_rsma", "sic_magic"};
    expect_rejected(doc, "schemes[1]");

    doc = base_doc();
    doc["users"][0]["grid"]["n1"] = -2;
    expect_rejected(doc, "users[0].grid.n1");

    doc = base_doc();
    doc["snr_db"]["step"] = 0;
    expect_rejected(doc, "snr_db.step");

    doc = base_doc();
    doc["mvt"] = {{"shifts", 1}};
    expect_rejected(doc, "mvt");

    doc = base_doc();
    doc["mc"] = {{"samples", 10}};
    expect_rejected(doc, "mc");

    doc = base_doc();
    doc["system"]["path_loss_exp"] = 1.5;
    expect_rejected(doc, "path_loss_exp");
}

TEST(LoadScenario, ParseErrors) {
    EXPECT_THROW(parse_scenario("{ not json"), ParseError);
    EXPECT_THROW(load_scenario("/nonexistent/file.scenario"), ParseError);
    // comments are allowed
    EXPECT_NO_THROW(parse_scenario("// note\n" + base_doc().dump()));
}

TEST(LoadScenario, Defaults) {
    const auto s = parse_scenario(base_doc().dump());
    EXPECT_EQ(s.system.mean_gain, 1.0);
    EXPECT_EQ(s.mvt.qmc_points, numerics::MvtSettings{}.qmc_points);
    EXPECT_TRUE(s.mc_enabled);
    EXPECT_EQ(s.output, "results");
}

TEST(LoadScenario, RoundTrip) {
    for (const auto& text : {base_doc().dump(), std::string()}) {
        const auto original = text.empty() ? load_scenario(paper_path()) : parse_scenario(text);
        const auto again = parse_scenario(to_json(original).dump(2));
        EXPECT_EQ(original, again);
        EXPECT_EQ(to_json(original), to_json(again));
    }
    auto doc = base_doc();
    doc["users"][0]["gamma_th_p_db"] = 1.7;
    doc["mc"] = {{"model", "physical"}, {"enabled", false}, {"seed", 99}};
    const auto s = parse_scenario(doc.dump());
    EXPECT_EQ(parse_scenario(to_json(s).dump()), s);
    EXPECT_EQ(to_json(s)["users"][0]["gamma_th_p_db"], 1.7);
}

TEST(Table, HeaderSortingAndEmptyFields) {
    sim::OutageResult a;
    a.scheme = sim::Scheme::tas_rsma;
    a.user = 0;
    a.snr_db = 10;
    a.analytic = 0.5;
    a.analytic_stderr = 0.0;
    a.flags = {"asymptote_invalid", "error: x, y"};
    sim::OutageResult b;
    b.scheme = sim::Scheme::fas_noma;
    b.user = 1;
    b.snr_db = 0;
    b.mc_estimate = 0.25;
    b.mc_ci95 = {0.2, 0.3};
    b.samples = 1000;
    const std::string table = format_table({a, b});
    const std::string expected = std::string(kTableHeader) + "\n" +
                                 "fas_noma,2,0,,,,0.25,0.2,0.3,1000,\n"
                                 "tas_rsma,1,10,0.5,0,,0,0,1,0,asymptote_invalid;error: x  y\n";
    EXPECT_EQ(table, expected);
    EXPECT_EQ(table.find('\r'), std::string::npos);
}

TEST(Validate, InfeasibleCommonThreshold) {
    auto doc = base_doc();
    doc["system"]["alpha_c"] = 0.4;
    doc["users"][0]["alpha_p"] = 0.45;
    doc["users"][1]["alpha_p"] = 0.15;
    doc["mc"] = {{"samples", 1000}};
    const auto report = validate_scenario(parse_scenario(doc.dump()));
    EXPECT_FALSE(report.clean());
    bool found = false;
    for (const auto& p : report.problems) found |= p.find("common threshold infeasible at all SNR") != std::string::npos;
    EXPECT_TRUE(found);
}

TEST(Validate, ReportsJitterForTinyAperture) {
    auto doc = base_doc();
    doc["users"][0]["alpha_p"] = 0.075;
    doc["users"][1]["alpha_p"] = 0.225;
    for (auto& u : doc["users"]) u["grid"] = {{"n1", 4}, {"n2", 4}, {"w1", 0.01}, {"w2", 0.01}};
    doc["mvt"] = {{"qmc_points", 256}, {"shifts", 4}};
    doc["mc"] = {{"samples", 1000}};
    const auto report = validate_scenario(parse_scenario(doc.dump()));
    bool jitter = false;
    for (const auto& n : report.notes) {
        const auto at = n.find("16 ports, applied jitter ");
        if (at != std::string::npos) jitter |= std::stod(n.substr(at + 25)) > 0.0;
    }
    EXPECT_TRUE(jitter);
    const double applied = channel::build_correlation_matrix({4, 4, 0.01, 0.01}).applied_jitter;
    EXPECT_GT(applied, 0.0);
}

TEST(Validate, FeasibleScenarioIsClean) {
    // With 0 dB private targets one of two users is always interference
    // limited below threshold; a -6 dB target fits under the 1/3 ceiling.
    auto doc = base_doc();
    for (auto& u : doc["users"]) u["gamma_th_p_db"] = -6;
    doc["mc"] = {{"samples", 1000}};
    const auto report = validate_scenario(parse_scenario(doc.dump()));
    EXPECT_TRUE(report.clean());
    EXPECT_FALSE(report.notes.empty());

    const auto paper = validate_scenario(load_scenario(paper_path()));
    ASSERT_EQ(paper.problems.size(), 1u);
    EXPECT_NE(paper.problems[0].find("users[1]: private threshold infeasible"), std::string::npos);
}
