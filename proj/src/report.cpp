#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "streambal/harness.hpp"

namespace streambal {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string sig6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// Value rounded to 6 significant digits; the JSON writer then prints the
// shortest representation, which is the rounded text.
double round6(double x) { return std::strtod(sig6(x).c_str(), nullptr); }

ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(round6(*v)) : ordered_json(nullptr);
}

std::string optional_field(const std::optional<double>& v) { return v ? sig6(*v) : ""; }

double mean_size(const DesignResult& d) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& [size, n] : d.size_distribution) {
        total += static_cast<double>(size) * static_cast<double>(n);
        count += n;
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

std::string to_json(const SimulationReport& report) {
    ordered_json doc;
    ordered_json meta;
    meta["config_hash"] = report.config_hash;
    meta["base_seed"] = report.base_seed;
    meta["replicates"] = report.replicates;
    meta["population_size"] = report.population_size;
    ordered_json totals;
    for (std::size_t v = 0; v < report.y_names.size(); ++v)
        totals[report.y_names[v]] = round6(report.true_totals[v]);
    meta["true_totals"] = totals.is_null() ? ordered_json::object() : totals;
    doc["metadata"] = meta;

    ordered_json designs = ordered_json::object();
    for (const auto& d : report.designs) {
        std::string key = d.design;
        for (int suffix = 2; designs.contains(key); ++suffix) key = d.design + "#" + std::to_string(suffix);
        ordered_json entry;
        entry["implemented"] = d.implemented;
        if (d.implemented) {
            ordered_json vars = ordered_json::object();
            for (const auto& v : d.variables) {
                ordered_json item;
                item["v_sim"] = round6(v.v_sim);
                item["ratio"] = optional_number(v.ratio);
                vars[v.name] = item;
            }
            entry["variables"] = vars;
            entry["mean_B"] = optional_number(d.mean_B);
            entry["se_B"] = optional_number(d.se_B);
            entry["mean_I"] = optional_number(d.mean_I);
            entry["se_I"] = optional_number(d.se_I);
            entry["undefined_spread"] = d.undefined_spread;
            ordered_json sizes = ordered_json::object();
            for (const auto& [size, n] : d.size_distribution) sizes[std::to_string(size)] = n;
            entry["size_distribution"] = sizes;
            entry["max_inclusion_deviation"] = round6(d.max_inclusion_deviation);
            if (d.mean_j) entry["mean_J"] = round6(*d.mean_j);
        }
        designs[key] = entry;
    }
    doc["designs"] = designs;
    return doc.dump(2) + "\n";
}

std::string to_csv(const SimulationReport& report) {
    std::ostringstream os;
    os << "design,variable,v_sim,ratio,mean_B,se_B,mean_I,se_I,mean_size,"
          "max_inclusion_deviation,config_hash\n";
    for (const auto& d : report.designs) {
        if (!d.implemented) {
            for (const auto& name : report.y_names)
                os << d.design << ',' << name << ",,,,,,,,," << report.config_hash << '\n';
            continue;
        }
        for (const auto& v : d.variables)
            os << d.design << ',' << v.name << ',' << sig6(v.v_sim) << ',' << optional_field(v.ratio)
               << ',' << optional_field(d.mean_B) << ',' << optional_field(d.se_B) << ','
               << optional_field(d.mean_I) << ',' << optional_field(d.se_I) << ','
               << sig6(mean_size(d)) << ',' << sig6(d.max_inclusion_deviation) << ','
               << report.config_hash << '\n';
    }
    return os.str();
}

}  // namespace

std::string format_report(const SimulationReport& report, ReportFormat format) {
    return format == ReportFormat::json ? to_json(report) : to_csv(report);
}

void emit_report(const SimulationReport& report, ReportFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open report file '" + path + "' for writing");
    out << format_report(report, format);
    out.flush();
    if (!out) throw Error("failed writing report file '" + path + "'");
}

std::string format_summary(const SimulationReport& report) {
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-20s", "design");
    os << buf;
    for (const auto& name : report.y_names) {
        std::snprintf(buf, sizeof buf, " %14s", ("ratio:" + name).substr(0, 14).c_str());
        os << buf;
    }
    std::snprintf(buf, sizeof buf, " %10s %10s\n", "B", "I");
    os << buf;
    for (const auto& d : report.designs) {
        std::snprintf(buf, sizeof buf, "%-20s", d.design.c_str());
        os << buf;
        if (!d.implemented) {
            os << " not implemented\n";
            continue;
        }
        for (const auto& v : d.variables) {
            std::snprintf(buf, sizeof buf, " %14s", v.ratio ? sig6(*v.ratio).c_str() : "-");
            os << buf;
        }
        std::snprintf(buf, sizeof buf, " %10s %10s\n", d.mean_B ? sig6(*d.mean_B).c_str() : "-",
                      d.mean_I ? sig6(*d.mean_I).c_str() : "-");
        os << buf;
    }
    return os.str();
}

}  // namespace streambal
