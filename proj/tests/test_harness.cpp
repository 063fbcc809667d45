#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "streambal/harness.hpp"

using namespace streambal;

namespace {

// 30 units on a jittered grid, pi summing to 6, y1 = 3 pi, y2 smooth in space.
Population study_population() {
    std::mt19937_64 gen(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Unit> units;
    std::vector<double> raw;
    for (int k = 0; k < 30; ++k) raw.push_back(0.5 + u(gen));
    double total = 0.0;
    for (double r : raw) total += r;
    for (int k = 0; k < 30; ++k) {
        Unit unit;
        unit.id = k + 1;
        unit.pi = raw[k] * 6.0 / total;
        unit.coords = {double(k % 6) + 0.1 * u(gen), double(k / 6) + 0.1 * u(gen)};
        unit.aux = {unit.pi};
        unit.y = {3.0 * unit.pi, std::sin(unit.coords[0]) + unit.coords[1]};
        units.push_back(unit);
    }
    return validate_population(units);
}

StudyConfig study(std::vector<DesignKind> kinds, std::size_t replicates) {
    StudyConfig cfg;
    cfg.bindings.y = {"linear", "smooth"};
    cfg.replicates = replicates;
    cfg.base_seed = 40;
    for (auto k : kinds) {
        DesignSpec d;
        d.kind = k;
        d.sampler.window = 8;
        cfg.designs.push_back(d);
    }
    return cfg;
}

const DesignResult& find(const SimulationReport& r, const std::string& name) {
    for (const auto& d : r.designs)
        if (d.design == name) return d;
    throw std::runtime_error("design not in report: " + name);
}

}  // namespace

TEST(SimulatedVariance, Definition) {
    const std::vector<double> e{9.0, 11.0, 13.0};
    EXPECT_NEAR(simulated_variance(e, 10.0), (1.0 + 1.0 + 9.0) / 3.0, 1e-15);
    EXPECT_THROW(simulated_variance(std::vector<double>{}, 1.0), DomainError);
}

TEST(SimulatedVariance, PermutationInvariant) {
    std::vector<double> e{1.5, -2.25, 1e8, 3.0, -1e8, 0.1};
    const double a = simulated_variance(e, 0.3);
    std::reverse(e.begin(), e.end());
    EXPECT_EQ(simulated_variance(e, 0.3), a);
    std::rotate(e.begin(), e.begin() + 2, e.end());
    EXPECT_EQ(simulated_variance(e, 0.3), a);
}

TEST(RunSimulation, SingleReplicateIdentity) {
    const auto pop = study_population();
    auto cfg = study({DesignKind::poisson}, 1);
    const auto report = run_simulation(cfg, pop);
    Rng rng(cfg.base_seed);
    const auto sample = poisson(pop, rng);
    const double err = ht_estimate(sample, pop, 1) - report.true_totals[1];
    EXPECT_NEAR(report.designs[0].variables[1].v_sim, err * err, 1e-9 * (1 + err * err));
    EXPECT_FALSE(report.designs[0].variables[0].ratio.has_value());
}

TEST(RunSimulation, ProportionalYHasZeroVarianceUnderFixedSize) {
    const auto pop = study_population();
    const auto report = run_simulation(
        study({DesignKind::proposed, DesignKind::local_pivotal, DesignKind::rejective_poisson}, 200), pop);
    for (const auto& d : report.designs) {
        EXPECT_LT(d.variables[0].v_sim, 1e-18) << d.design;
        ASSERT_EQ(d.size_distribution.size(), 1u) << d.design;
        EXPECT_EQ(d.size_distribution.begin()->first, 6u) << d.design;
    }
}

TEST(RunSimulation, ReferenceRatioIsExactlyHundred) {
    const auto pop = study_population();
    const auto report =
        run_simulation(study({DesignKind::proposed, DesignKind::rejective_poisson, DesignKind::local_cube}, 100), pop);
    const auto& ref = find(report, "rejective_poisson");
    ASSERT_TRUE(ref.variables[1].ratio.has_value());
    EXPECT_EQ(*ref.variables[1].ratio, 100.0);
    EXPECT_TRUE(find(report, "proposed").variables[1].ratio.has_value());
    EXPECT_TRUE(find(report, "proposed").mean_j.has_value());
    EXPECT_FALSE(find(report, "local_cube").implemented);
    EXPECT_TRUE(find(report, "proposed").mean_B.has_value());
    EXPECT_TRUE(find(report, "proposed").mean_I.has_value());
}

TEST(RunSimulation, ThreadCountDoesNotChangeReport) {
    const auto pop = study_population();
    auto cfg = study({DesignKind::proposed, DesignKind::local_pivotal, DesignKind::poisson}, 60);
    cfg.threads = 1;
    const auto one = format_report(run_simulation(cfg, pop), ReportFormat::json);
    cfg.threads = 4;
    const auto four = format_report(run_simulation(cfg, pop), ReportFormat::json);
    EXPECT_EQ(one, four);
}

TEST(RunSimulation, ShuffleIsSeededAndKeepsInclusionOrder) {
    const auto pop = study_population();
    auto cfg = study({DesignKind::proposed}, 300);
    cfg.designs[0].shuffle = true;
    const auto a = run_simulation(cfg, pop);
    const auto b = run_simulation(cfg, pop);
    EXPECT_EQ(a.designs[0].inclusion_frequency, b.designs[0].inclusion_frequency);
    EXPECT_LT(a.designs[0].max_inclusion_deviation, 0.15);
}

TEST(RunSimulation, ConfigChecks) {
    const auto pop = study_population();
    auto cfg = study({DesignKind::proposed}, 10);
    cfg.designs[0].sampler.window = 0;
    EXPECT_THROW(run_simulation(cfg, pop), ConfigError);
    cfg = study({}, 10);
    EXPECT_THROW(run_simulation(cfg, pop), ConfigError);
    cfg = study({DesignKind::poisson}, 0);
    EXPECT_THROW(run_simulation(cfg, pop), ConfigError);
}

TEST(StudyConfigTest, ParseAndHash) {
    const auto cfg = parse_study_config(R"({"population": "p.csv", "pi": "prop:t,n=5", "aux": ["@pi", "x"],
        "coords": "cx,cy", "y": "y", "window": 12, "seed": 9, "replicates": 50,
        "designs": "proposed,max_entropy", "format": "csv", "shuffle": true, "out": "r.csv"})");
    EXPECT_EQ(cfg.population_path, "p.csv");
    EXPECT_EQ(cfg.bindings.aux, (std::vector<std::string>{"@pi", "x"}));
    EXPECT_EQ(cfg.bindings.coords.size(), 2u);
    ASSERT_EQ(cfg.designs.size(), 2u);
    EXPECT_EQ(cfg.designs[0].sampler.window, 12u);
    EXPECT_TRUE(cfg.designs[0].shuffle);
    EXPECT_EQ(cfg.designs[1].kind, DesignKind::rejective_poisson);
    EXPECT_EQ(cfg.format, ReportFormat::csv);
    EXPECT_EQ(cfg.base_seed, 9u);

    auto moved = cfg;
    moved.output_path = "elsewhere.csv";
    moved.threads = 8;
    EXPECT_EQ(config_hash(moved), config_hash(cfg));
    moved.base_seed = 10;
    EXPECT_NE(config_hash(moved), config_hash(cfg));
    EXPECT_EQ(config_hash(cfg).size(), 16u);
}

TEST(StudyConfigTest, Rejections) {
    EXPECT_THROW(parse_study_config("{"), ConfigError);
    EXPECT_THROW(parse_study_config(R"({"windows": 3})"), ConfigError);
    EXPECT_THROW(parse_study_config(R"({"designs": "cube"})"), ConfigError);
    EXPECT_THROW(parse_study_config(R"({"window": "big"})"), ConfigError);
    EXPECT_THROW(parse_study_config("[1]"), ConfigError);
}

TEST(Report, JsonRoundTrip) {
    const auto pop = study_population();
    const auto report = run_simulation(study({DesignKind::proposed, DesignKind::rejective_poisson}, 40), pop);
    const auto doc = nlohmann::json::parse(format_report(report, ReportFormat::json));
    EXPECT_EQ(doc["metadata"]["config_hash"], report.config_hash);
    EXPECT_EQ(doc["metadata"]["replicates"], 40);
    const auto& prop = doc["designs"]["proposed"];
    const double v = prop["variables"]["smooth"]["v_sim"].get<double>();
    EXPECT_NEAR(v, report.designs[0].variables[1].v_sim, 1e-5 * report.designs[0].variables[1].v_sim);
    EXPECT_EQ(doc["designs"]["rejective_poisson"]["variables"]["smooth"]["ratio"].get<double>(), 100.0);
    EXPECT_NEAR(prop["mean_B"].get<double>(), *report.designs[0].mean_B, 1e-5);
}

TEST(Report, CsvOneRowPerDesignAndVariable) {
    const auto pop = study_population();
    const auto report =
        run_simulation(study({DesignKind::proposed, DesignKind::poisson, DesignKind::local_cube}, 20), pop);
    std::istringstream in(format_report(report, ReportFormat::csv));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("design,variable,v_sim,ratio", 0), 0u);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3 * 2);
}

TEST(Report, EmitIsByteIdentical) {
    const auto pop = study_population();
    const auto cfg = study({DesignKind::proposed, DesignKind::rejective_poisson}, 30);
    const auto dir = std::filesystem::temp_directory_path();
    const auto a = (dir / "streambal_report_a.json").string();
    const auto b = (dir / "streambal_report_b.json").string();
    emit_report(run_simulation(cfg, pop), ReportFormat::json, a);
    emit_report(run_simulation(cfg, pop), ReportFormat::json, b);
    std::ifstream fa(a), fb(b);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_FALSE(sa.str().empty());
    EXPECT_EQ(sa.str(), sb.str());
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST(Report, SummaryLayout) {
    const auto pop = study_population();
    const auto report = run_simulation(
        study({DesignKind::proposed, DesignKind::rejective_poisson, DesignKind::local_cube}, 20), pop);
    const auto text = format_summary(report);
    EXPECT_NE(text.find("ratio:smooth"), std::string::npos);
    EXPECT_NE(text.find("not implemented"), std::string::npos);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("rejective_poisson", 0) == 0) EXPECT_NE(line.find(" 100 "), std::string::npos);
}
