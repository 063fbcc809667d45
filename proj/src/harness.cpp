#include "streambal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "streambal/sampler.hpp"
#include "streambal/spread.hpp"

namespace streambal {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += items[i];
    }
    return out;
}

std::vector<std::string> string_list(const nlohmann::json& value, const char* key) {
    if (value.is_string()) return split_list(value.get<std::string>());
    if (value.is_array()) {
        std::vector<std::string> out;
        for (const auto& item : value) {
            if (!item.is_string()) throw ConfigError(std::string("'") + key + "' entries must be strings");
            out.push_back(item.get<std::string>());
        }
        return out;
    }
    throw ConfigError(std::string("'") + key + "' must be a string or a list of strings");
}

struct ReplicateResult {
    std::vector<double> estimates;
    std::optional<double> b;
    std::optional<double> i;
    std::size_t size = 0;
    double mean_j = 0.0;
};

SampleVector run_proposed(const Population& pop, const DesignSpec& spec, std::uint64_t seed,
                          double& mean_j) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (spec.shuffle) {
        Rng shuffler(seed ^ kShuffleSalt);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffler.below(i)]);
    }
    SamplerConfig cfg = spec.sampler;
    cfg.seed = seed;
    StreamSampler sampler(cfg, pop.p, pop.q);
    for (auto k : order) sampler.push(pop.units[k]);
    const auto result = sampler.finish();
    mean_j = sampler.stats().mean_j();

    std::vector<std::uint8_t> a(pop.size());
    for (std::size_t i = 0; i < order.size(); ++i) a[order[i]] = result.sample.values()[i];
    return SampleVector(std::move(a));
}

void check_design(const DesignSpec& spec, const Population& pop) {
    switch (spec.kind) {
        case DesignKind::proposed: {
            if (spec.sampler.window == 0) throw ConfigError("proposed design needs a window");
            [[maybe_unused]] StreamSampler probe(spec.sampler, pop.p, pop.q);
            break;
        }
        case DesignKind::local_pivotal:
            if (!pop.has_coords()) throw ConfigError("local_pivotal needs coordinates");
            break;
        case DesignKind::rejective_poisson: {
            const double total = pop.pi_total();
            if (std::abs(total - std::round(total)) > 1e-6)
                throw ConfigError("rejective_poisson needs an integer sum of inclusion probabilities");
            break;
        }
        case DesignKind::poisson:
        case DesignKind::local_cube:
            break;
    }
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
    const double mean = compensated_sum(values) / static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double v : values) sq.push_back((v - mean) * (v - mean));
    const double var = compensated_sum(sq) / static_cast<double>(values.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

}  // namespace

std::optional<ReportFormat> parse_report_format(std::string_view text) {
    if (text == "json") return ReportFormat::json;
    if (text == "csv") return ReportFormat::csv;
    return std::nullopt;
}

StudyConfig parse_study_config(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    static const std::vector<std::string> known{"population", "pi",      "aux",        "coords",
                                                "y",          "id",      "window",     "seed",
                                                "replicates", "designs", "out",        "format",
                                                "shuffle",    "threads"};
    for (const auto& [key, _] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key '" + key + "'");

    StudyConfig cfg;
    try {
        if (doc.contains("population")) cfg.population_path = doc["population"].get<std::string>();
        if (doc.contains("pi")) cfg.bindings.pi = parse_pi_binding(doc["pi"].get<std::string>());
        if (doc.contains("aux")) cfg.bindings.aux = string_list(doc["aux"], "aux");
        if (doc.contains("coords")) cfg.bindings.coords = string_list(doc["coords"], "coords");
        if (doc.contains("y")) cfg.bindings.y = string_list(doc["y"], "y");
        if (doc.contains("id")) cfg.bindings.id_column = doc["id"].get<std::string>();
        if (doc.contains("seed")) cfg.base_seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("replicates")) cfg.replicates = doc["replicates"].get<std::size_t>();
        if (doc.contains("out")) cfg.output_path = doc["out"].get<std::string>();
        if (doc.contains("threads")) cfg.threads = doc["threads"].get<std::size_t>();
        if (doc.contains("format")) {
            const auto f = parse_report_format(doc["format"].get<std::string>());
            if (!f) throw ConfigError("format must be json or csv");
            cfg.format = *f;
        }
        const std::size_t window = doc.contains("window") ? doc["window"].get<std::size_t>() : 0;
        const bool shuffle = doc.contains("shuffle") && doc["shuffle"].get<bool>();
        if (doc.contains("designs")) {
            for (const auto& name : string_list(doc["designs"], "designs")) {
                const auto kind = parse_design(name);
                if (!kind) throw ConfigError("unknown design '" + name + "'");
                DesignSpec spec;
                spec.kind = *kind;
                spec.sampler.window = window;
                spec.shuffle = shuffle;
                cfg.designs.push_back(spec);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }
    return cfg;
}

std::string canonical_config(const StudyConfig& config) {
    ordered_json doc;
    doc["population"] = config.population_path;
    doc["pi"] = to_string(config.bindings.pi);
    doc["aux"] = join(config.bindings.aux);
    doc["coords"] = join(config.bindings.coords);
    doc["y"] = join(config.bindings.y);
    doc["id"] = config.bindings.id_column;
    ordered_json designs = ordered_json::array();
    for (const auto& d : config.designs) {
        ordered_json entry;
        entry["kind"] = design_name(d.kind);
        if (d.kind == DesignKind::proposed) {
            entry["window"] = d.sampler.window;
            entry["initial_j"] = d.sampler.initial_j;
            entry["max_j"] = d.sampler.max_j;
            entry["cost_rule"] = d.sampler.cost_rule == CostRule::rank ? "rank" : "position";
            entry["shuffle"] = d.shuffle;
        }
        designs.push_back(entry);
    }
    doc["designs"] = designs;
    doc["replicates"] = config.replicates;
    doc["seed"] = config.base_seed;
    doc["format"] = config.format == ReportFormat::json ? "json" : "csv";
    return doc.dump();
}

std::string config_hash(const StudyConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_config(config)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double simulated_variance(std::span<const double> estimates, double total) {
    if (estimates.empty()) throw DomainError("simulated variance needs at least one replicate");
    std::vector<double> sq;
    sq.reserve(estimates.size());
    for (double e : estimates) sq.push_back((e - total) * (e - total));
    std::sort(sq.begin(), sq.end());
    return compensated_sum(sq) / static_cast<double>(estimates.size());
}

SimulationReport run_simulation(const StudyConfig& config, const Population& pop) {
    if (config.replicates == 0) throw ConfigError("replicates must be positive");
    if (config.designs.empty()) throw ConfigError("at least one design is required");
    for (const auto& d : config.designs) check_design(d, pop);

    SimulationReport report;
    report.base_seed = config.base_seed;
    report.replicates = config.replicates;
    report.config_hash = config_hash(config);
    report.population_size = pop.size();

    const std::size_t ny = pop.units.front().y.size();
    for (std::size_t v = 0; v < ny; ++v) {
        report.y_names.push_back(config.bindings.y.size() == ny ? config.bindings.y[v]
                                                                : "y" + std::to_string(v + 1));
        report.true_totals.push_back(true_total(pop, v));
    }

    std::optional<ContiguityMatrix> weights;
    if (pop.has_coords() && pop.size() >= 2) weights = build_contiguity_matrix(pop);
    const std::size_t n_fixed = static_cast<std::size_t>(std::llround(pop.pi_total()));
    const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, config.replicates));

    std::optional<std::size_t> reference;
    for (const auto& design : config.designs) {
        DesignResult result;
        result.design = std::string(design_name(design.kind));
        if (design.kind == DesignKind::local_cube) {
            result.implemented = false;
            report.designs.push_back(std::move(result));
            continue;
        }
        if (design.kind == DesignKind::rejective_poisson && !reference)
            reference = report.designs.size();

        std::vector<ReplicateResult> replicates(config.replicates);
        std::vector<std::vector<std::size_t>> counts(threads, std::vector<std::size_t>(pop.size(), 0));
        std::mutex failure_mutex;
        std::optional<std::size_t> failed_at;
        std::string failure;

        auto worker = [&](std::size_t t) {
            for (std::size_t r = t; r < config.replicates; r += threads) {
                const std::uint64_t seed = config.base_seed + r;
                try {
                    ReplicateResult& out = replicates[r];
                    SampleVector sample;
                    Rng rng(seed);
                    switch (design.kind) {
                        case DesignKind::proposed: sample = run_proposed(pop, design, seed, out.mean_j); break;
                        case DesignKind::local_pivotal: sample = local_pivotal(pop, rng); break;
                        case DesignKind::rejective_poisson: sample = rejective_poisson(pop, n_fixed, rng); break;
                        case DesignKind::poisson: sample = poisson(pop, rng); break;
                        case DesignKind::local_cube: break;
                    }
                    out.size = sample.count();
                    for (std::size_t v = 0; v < ny; ++v) out.estimates.push_back(ht_estimate(sample, pop, v));
                    if (weights && out.size > 0) {
                        out.b = voronoi_balance_B(pop, sample);
                        if (out.size < pop.size()) out.i = moran_I(sample, *weights);
                    }
                    for (std::size_t k = 0; k < pop.size(); ++k) counts[t][k] += sample.values()[k];
                } catch (const std::exception& e) {
                    std::lock_guard lock(failure_mutex);
                    if (!failed_at || r < *failed_at) {
                        failed_at = r;
                        failure = e.what();
                    }
                    return;
                }
            }
        };

        if (threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
            for (auto& th : pool) th.join();
        }
        if (failed_at)
            throw SamplingError("design " + result.design + " failed at replicate " +
                                std::to_string(*failed_at) + " (seed " +
                                std::to_string(config.base_seed + *failed_at) + "): " + failure);

        for (std::size_t v = 0; v < ny; ++v) {
            std::vector<double> estimates;
            estimates.reserve(config.replicates);
            for (const auto& rep : replicates) estimates.push_back(rep.estimates[v]);
            result.variables.push_back(
                {report.y_names[v], simulated_variance(estimates, report.true_totals[v]), std::nullopt});
        }

        std::vector<double> bs, is, js;
        for (const auto& rep : replicates) {
            ++result.size_distribution[rep.size];
            if (rep.b) bs.push_back(*rep.b);
            if (rep.i) is.push_back(*rep.i);
            if (weights && (!rep.b || !rep.i)) ++result.undefined_spread;
            js.push_back(rep.mean_j);
        }
        if (!bs.empty()) std::tie(result.mean_B, result.se_B) = mean_and_se(bs);
        if (!is.empty()) std::tie(result.mean_I, result.se_I) = mean_and_se(is);
        if (design.kind == DesignKind::proposed) result.mean_j = compensated_sum(js) / js.size();

        result.inclusion_frequency.assign(pop.size(), 0.0);
        for (std::size_t k = 0; k < pop.size(); ++k) {
            std::size_t c = 0;
            for (const auto& per_thread : counts) c += per_thread[k];
            result.inclusion_frequency[k] = static_cast<double>(c) / config.replicates;
            result.max_inclusion_deviation = std::max(
                result.max_inclusion_deviation, std::abs(result.inclusion_frequency[k] - pop.units[k].pi));
        }
        report.designs.push_back(std::move(result));
    }

    if (reference) {
        const auto& ref = report.designs[*reference].variables;
        for (auto& design : report.designs) {
            if (!design.implemented) continue;
            for (std::size_t v = 0; v < design.variables.size(); ++v)
                if (ref[v].v_sim > 0.0) design.variables[v].ratio = 100.0 * (design.variables[v].v_sim / ref[v].v_sim);
        }
    }
    return report;
}

SimulationReport run_simulation(const StudyConfig& config) {
    const auto pop = load_population_csv(config.population_path, config.bindings);
    return run_simulation(config, pop);
}

}  // namespace streambal
