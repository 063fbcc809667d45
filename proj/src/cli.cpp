#include "streambal/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "CLI11.hpp"
#include "streambal/baselines.hpp"
#include "streambal/data.hpp"
#include "streambal/harness.hpp"
#include "streambal/sampler.hpp"
#include "streambal/spread.hpp"

namespace streambal::cli {

namespace {

struct BindingFlags {
    std::string pi = "";
    std::string aux = std::string(kPiToken);
    std::string coords;
    std::string y;
    std::string id;

    ColumnBindings resolve() const {
        if (pi.empty()) throw ConfigError("--pi is required");
        ColumnBindings b;
        b.pi = parse_pi_binding(pi);
        b.aux = split_list(aux);
        b.coords = split_list(coords);
        b.y = split_list(y);
        b.id_column = id;
        return b;
    }
};

struct SamplerFlags {
    std::size_t window = 0;
    std::uint64_t seed = 0;
    std::size_t initial_j = 0;
    std::size_t max_j = 0;
};

void add_bindings(CLI::App& app, BindingFlags& flags, bool with_y) {
    app.add_option("--pi", flags.pi, "fixed:V | col:NAME | prop:NAME,n=N");
    app.add_option("--aux", flags.aux, "balancing columns; @pi is the inclusion probability")
        ->capture_default_str();
    app.add_option("--coords", flags.coords, "coordinate columns");
    if (with_y) app.add_option("--y", flags.y, "variables of interest");
    app.add_option("--id", flags.id, "id column (default: 'id' if present, else row number)");
}

void add_sampler(CLI::App& app, SamplerFlags& flags) {
    app.add_option("--window", flags.window, "pool capacity M")->required();
    app.add_option("--seed", flags.seed, "random seed")->required();
    app.add_option("--initial-j", flags.initial_j, "first J tried (default p + 1)");
    app.add_option("--max-j", flags.max_j, "largest J tried (default window)");
}

SamplerConfig sampler_config(const SamplerFlags& flags) {
    SamplerConfig cfg;
    cfg.window = flags.window;
    cfg.seed = flags.seed;
    cfg.initial_j = flags.initial_j;
    cfg.max_j = flags.max_j;
    return cfg;
}

void warn_dropped(const Population& pop, std::ostream& err) {
    for (auto id : pop.dropped_zero_pi)
        err << "warning: unit " << id << " has zero inclusion probability and was dropped\n";
}

int cmd_sample(const std::string& population, const BindingFlags& bindings, const SamplerFlags& flags,
               const std::string& out_path, const std::string& log_path, std::ostream& out,
               std::ostream& err) {
    const auto pop = load_population_csv(population, bindings.resolve());
    warn_dropped(pop, err);
    StreamSampler sampler(sampler_config(flags), pop.p, pop.q);
    for (const auto& unit : pop.units) sampler.push(unit);
    const auto result = sampler.finish();

    std::ostringstream ids;
    for (std::size_t k = 0; k < result.ids.size(); ++k)
        if (result.sample.selected(k)) ids << result.ids[k] << '\n';
    if (out_path.empty()) {
        out << ids.str();
    } else {
        std::ofstream file(out_path);
        if (!file) throw ConfigError("cannot write '" + out_path + "'");
        file << ids.str();
    }
    if (!log_path.empty()) {
        std::ofstream log(log_path);
        if (!log) throw ConfigError("cannot write '" + log_path + "'");
        log << "step,unit_id,outcome,phase,J_used\n";
        for (const auto& r : sampler.decisions()) log << to_log_line(r) << '\n';
    }
    return ok;
}

int cmd_stream(const BindingFlags& flags, const SamplerFlags& sflags, bool strict,
               const std::string& log_path, std::istream& in, std::ostream& out, std::ostream& err) {
    const auto bindings = flags.resolve();
    if (bindings.pi.kind == PiBinding::Kind::proportional)
        throw ConfigError("prop: inclusion probabilities need the whole population; use col: or fixed:");

    std::string line;
    if (!std::getline(in, line)) return ok;
    const auto header = split_csv_line(line);
    const RowBinder binder(header, bindings);
    StreamSampler sampler(sampler_config(sflags), bindings.aux.size(), bindings.coords.size());

    auto emit = [&out](const std::vector<DecisionRecord>& records) {
        for (const auto& r : records) out << r.unit_id << ',' << r.outcome << '\n' << std::flush;
    };

    std::unordered_set<UnitId> seen;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++row;
        Unit unit;
        try {
            unit = binder.bind(split_csv_line(line), row);
            if (!seen.insert(unit.id).second)
                throw DataError("row " + std::to_string(row) + ": duplicate id " + std::to_string(unit.id));
            if (unit.pi < 0.0 || unit.pi > 1.0)
                throw DataError("row " + std::to_string(row) + ": inclusion probability outside [0, 1]");
        } catch (const DataError& e) {
            err << "error: " << e.what() << '\n';
            if (strict) return data;
            continue;
        }
        if (unit.pi == 0.0) {
            out << unit.id << ",0\n" << std::flush;
            continue;
        }
        emit(sampler.push(std::move(unit)));
    }
    emit(sampler.finish().records);

    if (!log_path.empty()) {
        std::ofstream log(log_path);
        if (!log) throw ConfigError("cannot write '" + log_path + "'");
        log << "step,unit_id,outcome,phase,J_used\n";
        for (const auto& r : sampler.decisions()) log << to_log_line(r) << '\n';
    }
    return ok;
}

int cmd_measure(const std::string& population, const BindingFlags& flags, const std::string& sample_path,
                std::ostream& out, std::ostream& err) {
    const auto pop = load_population_csv(population, flags.resolve());
    warn_dropped(pop, err);
    if (!pop.has_coords()) throw ConfigError("measure needs --coords");

    std::ifstream in(sample_path);
    if (!in) throw ConfigError("cannot open sample file '" + sample_path + "'");
    std::unordered_map<UnitId, std::size_t> index;
    for (std::size_t k = 0; k < pop.size(); ++k) index.emplace(pop.units[k].id, k);

    std::vector<std::uint8_t> a(pop.size(), 0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto field = split_csv_line(line).front();
        if (field.find_first_not_of(" \t\r") == std::string::npos) continue;
        UnitId id = 0;
        try {
            std::size_t used = 0;
            id = std::stoll(field, &used);
            if (field.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(field);
        } catch (const std::logic_error&) {
            throw DataError("sample file line " + std::to_string(line_no) + ": '" + field + "' is not an id");
        }
        const auto it = index.find(id);
        if (it == index.end()) throw DataError("sample id " + std::to_string(id) + " is not in the population");
        a[it->second] = 1;
    }
    const SampleVector sample(std::move(a));
    const double b = voronoi_balance_B(pop, sample);
    const double i = moran_I(sample, build_contiguity_matrix(pop));

    char buf[128];
    std::snprintf(buf, sizeof buf, "{\"n\": %zu, \"B\": %.12g, \"I\": %.12g}\n", sample.count(), b, i);
    out << buf;
    return ok;
}

struct SimulateFlags {
    std::string config_path;
    std::string population;
    BindingFlags bindings;
    std::size_t window = 0;
    std::uint64_t seed = 1;
    std::size_t replicates = 1000;
    std::string designs;
    std::string out;
    std::string format = "json";
    bool shuffle = false;
    std::size_t threads = 0;
};

int cmd_simulate(const CLI::App& app, const SimulateFlags& flags, std::ostream& out) {
    auto given = [&app](const char* name) { return app.get_option(name)->count() > 0; };

    StudyConfig cfg;
    std::size_t window = 0;
    bool shuffle = false;
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) throw ConfigError("cannot open config file '" + flags.config_path + "'");
        std::stringstream text;
        text << in.rdbuf();
        cfg = parse_study_config(text.str());
        for (const auto& d : cfg.designs)
            if (d.kind == DesignKind::proposed) {
                window = d.sampler.window;
                shuffle = d.shuffle;
            }
    }
    if (given("--population")) cfg.population_path = flags.population;
    if (given("--pi")) cfg.bindings.pi = parse_pi_binding(flags.bindings.pi);
    if (given("--aux")) cfg.bindings.aux = split_list(flags.bindings.aux);
    if (given("--coords")) cfg.bindings.coords = split_list(flags.bindings.coords);
    if (given("--y")) cfg.bindings.y = split_list(flags.bindings.y);
    if (given("--id")) cfg.bindings.id_column = flags.bindings.id;
    if (given("--seed")) cfg.base_seed = flags.seed;
    if (given("--replicates")) cfg.replicates = flags.replicates;
    if (given("--out")) cfg.output_path = flags.out;
    if (given("--window")) window = flags.window;
    if (given("--shuffle")) shuffle = flags.shuffle;
    if (given("--format")) {
        const auto f = parse_report_format(flags.format);
        if (!f) throw ConfigError("--format must be json or csv");
        cfg.format = *f;
    }
    if (given("--designs")) {
        cfg.designs.clear();
        for (const auto& name : split_list(flags.designs)) {
            const auto kind = parse_design(name);
            if (!kind) throw ConfigError("unknown design '" + name + "'");
            cfg.designs.push_back({*kind, {}, false});
        }
    }
    for (auto& d : cfg.designs) {
        d.sampler.window = window;
        d.shuffle = shuffle;
    }
    cfg.threads = given("--threads") ? flags.threads
                                     : (flags.config_path.empty() || cfg.threads == 1
                                            ? std::max(1u, std::thread::hardware_concurrency())
                                            : cfg.threads);

    if (cfg.population_path.empty()) throw ConfigError("--population (or config 'population') is required");
    if (cfg.designs.empty()) throw ConfigError("--designs (or config 'designs') is required");

    const auto report = run_simulation(cfg);
    if (!cfg.output_path.empty()) emit_report(report, cfg.format, cfg.output_path);
    out << format_summary(report);
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sequential balanced sampling: sample, stream, measure, simulate"};
    app.require_subcommand(1);

    std::string population;
    BindingFlags bindings;
    SamplerFlags sampler_flags;
    std::string out_path;
    std::string log_path;
    auto* sample = app.add_subcommand("sample", "sample a whole population file");
    sample->add_option("--population", population, "population CSV")->required();
    add_bindings(*sample, bindings, false);
    add_sampler(*sample, sampler_flags);
    sample->add_option("--out", out_path, "selected ids (default: standard output)");
    sample->add_option("--log", log_path, "decision log");

    BindingFlags stream_bindings;
    SamplerFlags stream_flags;
    bool strict = false;
    std::string stream_log;
    auto* stream = app.add_subcommand("stream", "decide CSV rows arriving on standard input");
    add_bindings(*stream, stream_bindings, false);
    add_sampler(*stream, stream_flags);
    stream->add_flag("--strict", strict, "abort on the first malformed row");
    stream->add_option("--log", stream_log, "decision log written at end of input");

    std::string measure_population;
    BindingFlags measure_bindings;
    std::string sample_path;
    auto* measure = app.add_subcommand("measure", "spatial balance B and Moran I of a sample");
    measure->add_option("--population", measure_population, "population CSV")->required();
    add_bindings(*measure, measure_bindings, false);
    measure->add_option("--sample", sample_path, "file of selected ids")->required();

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo comparison of designs");
    simulate->add_option("--config", sim.config_path, "study config (JSON, keys mirror the flags)");
    simulate->add_option("--population", sim.population, "population CSV");
    add_bindings(*simulate, sim.bindings, true);
    simulate->add_option("--window", sim.window, "pool capacity M for the proposed design");
    simulate->add_option("--seed", sim.seed, "base seed");
    simulate->add_option("--replicates", sim.replicates, "replicates R");
    simulate->add_option("--designs", sim.designs,
                         "proposed,local_pivotal,rejective_poisson,poisson,local_cube");
    simulate->add_option("--out", sim.out, "report file");
    simulate->add_option("--format", sim.format, "json | csv");
    simulate->add_flag("--shuffle", sim.shuffle, "stream the population in a seeded random order");
    simulate->add_option("--threads", sim.threads, "worker threads (results do not depend on it)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config;
    }

    try {
        if (*sample) return cmd_sample(population, bindings, sampler_flags, out_path, log_path, out, err);
        if (*stream) return cmd_stream(stream_bindings, stream_flags, strict, stream_log, in, out, err);
        if (*measure) return cmd_measure(measure_population, measure_bindings, sample_path, out, err);
        if (*simulate) return cmd_simulate(*simulate, sim, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return data;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return internal;
    }
    return internal;
}

}  // namespace streambal::cli
