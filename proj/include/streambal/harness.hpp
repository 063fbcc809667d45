#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streambal/baselines.hpp"
#include "streambal/core.hpp"
#include "streambal/data.hpp"

namespace streambal {

enum class ReportFormat { json, csv };

std::optional<ReportFormat> parse_report_format(std::string_view text);

struct StudyConfig {
    std::string population_path;
    ColumnBindings bindings;
    std::vector<DesignSpec> designs;
    std::size_t replicates = 1000;
    std::uint64_t base_seed = 1;
    std::string output_path;  // empty: no report file
    ReportFormat format = ReportFormat::json;
    std::size_t threads = 1;  // does not affect results
};

// Flag-named JSON keys: population, pi, aux, coords, y, id, window, seed,
// replicates, designs, out, format, shuffle, threads.
StudyConfig parse_study_config(std::string_view json_text);

// Canonical JSON of everything that affects results (no output path, no
// thread count) and its FNV-1a hash.
std::string canonical_config(const StudyConfig& config);
std::string config_hash(const StudyConfig& config);

struct VariableResult {
    std::string name;
    double v_sim = 0.0;
    std::optional<double> ratio;  // 100 * v_sim / v_sim(max-entropy)
};

struct DesignResult {
    std::string design;
    bool implemented = true;
    std::vector<VariableResult> variables;
    std::optional<double> mean_B;
    std::optional<double> se_B;
    std::optional<double> mean_I;
    std::optional<double> se_I;
    std::size_t undefined_spread = 0;  // replicates where B or I was undefined
    std::map<std::size_t, std::size_t> size_distribution;
    std::vector<double> inclusion_frequency;  // population order
    double max_inclusion_deviation = 0.0;
    std::optional<double> mean_j;  // proposed design only
};

struct SimulationReport {
    std::uint64_t base_seed = 0;
    std::size_t replicates = 0;
    std::string config_hash;
    std::size_t population_size = 0;
    std::vector<std::string> y_names;
    std::vector<double> true_totals;
    std::vector<DesignResult> designs;
};

// (1/R) sum_r (estimate_r - total)^2, compensated.
double simulated_variance(std::span<const double> estimates, double total);

// Runs every design for config.replicates replicates with seed
// base_seed + r. Aggregation happens in replicate order, so the report does
// not depend on the thread count.
SimulationReport run_simulation(const StudyConfig& config, const Population& pop);
SimulationReport run_simulation(const StudyConfig& config);

// Serialises with 6 significant digits and a fixed field order.
std::string format_report(const SimulationReport& report, ReportFormat format);
void emit_report(const SimulationReport& report, ReportFormat format, const std::string& path);

// Designs x {ratios, B, I} text table.
std::string format_summary(const SimulationReport& report);

}  // namespace streambal
