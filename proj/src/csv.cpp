#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "streambal/data.hpp"

namespace streambal {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

std::size_t find_column(std::span<const std::string> header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

PiBinding parse_pi_binding(std::string_view text) {
    PiBinding b;
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ConfigError("pi binding must be fixed:V, col:NAME or prop:NAME,n=N");
    const auto kind = text.substr(0, colon);
    const auto rest = text.substr(colon + 1);
    if (kind == "fixed") {
        b.kind = PiBinding::Kind::fixed;
        if (!parse_double(rest, b.value) || b.value < 0.0 || b.value > 1.0)
            throw ConfigError("fixed pi must be a number in [0, 1]");
    } else if (kind == "col") {
        b.kind = PiBinding::Kind::column;
        b.column = std::string(trim(rest));
        if (b.column.empty()) throw ConfigError("col: binding needs a column name");
    } else if (kind == "prop") {
        b.kind = PiBinding::Kind::proportional;
        const auto comma = rest.find(',');
        if (comma == std::string_view::npos || trim(rest.substr(comma + 1)).substr(0, 2) != "n=")
            throw ConfigError("prop binding must read prop:NAME,n=N");
        b.column = std::string(trim(rest.substr(0, comma)));
        if (!parse_double(trim(rest.substr(comma + 1)).substr(2), b.n) || b.n <= 0.0)
            throw ConfigError("prop binding needs a positive n");
    } else {
        throw ConfigError("unknown pi binding '" + std::string(kind) + "'");
    }
    return b;
}

std::string to_string(const PiBinding& b) {
    std::ostringstream os;
    os.precision(17);
    switch (b.kind) {
        case PiBinding::Kind::fixed: os << "fixed:" << b.value; break;
        case PiBinding::Kind::column: os << "col:" << b.column; break;
        case PiBinding::Kind::proportional: os << "prop:" << b.column << ",n=" << b.n; break;
    }
    return os.str();
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    text = trim(text);
    if (text.empty() || text == "none") return out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
        if (item.empty()) throw ConfigError("empty entry in list '" + std::string(text) + "'");
        out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw DataError("unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

std::vector<double> proportional_pis(std::span<const double> sizes, double n) {
    std::size_t positive = 0;
    for (double t : sizes) {
        if (!std::isfinite(t) || t < 0.0) throw DataError("size measure must be finite and >= 0");
        if (t > 0.0) ++positive;
    }
    if (!(n > 0.0) || n > static_cast<double>(positive))
        throw ConfigError("target size n must lie in (0, number of units with positive size]");

    std::vector<double> pi(sizes.size(), 0.0);
    std::vector<bool> capped(sizes.size(), false);
    double remaining = n;
    for (;;) {
        std::vector<double> free_sizes;
        for (std::size_t k = 0; k < sizes.size(); ++k)
            if (!capped[k]) free_sizes.push_back(sizes[k]);
        const double total = compensated_sum(free_sizes);
        bool changed = false;
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            if (capped[k]) continue;
            pi[k] = total > 0.0 ? remaining * sizes[k] / total : 0.0;
            if (pi[k] >= 1.0) {
                pi[k] = 1.0;
                capped[k] = true;
                remaining -= 1.0;
                changed = true;
            }
        }
        if (!changed) break;
    }
    for (double v : pi)
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("inclusion probability out of range after capping");
    return pi;
}

RowBinder::RowBinder(std::span<const std::string> header, ColumnBindings bindings)
    : bindings_(std::move(bindings)), header_(header.begin(), header.end()), width_(header.size()) {
    if (!bindings_.id_column.empty()) {
        id_col_ = static_cast<long>(find_column(header, bindings_.id_column));
    } else if (std::find(header.begin(), header.end(), "id") != header.end()) {
        id_col_ = static_cast<long>(find_column(header, "id"));
    }
    if (bindings_.pi.kind != PiBinding::Kind::fixed)
        pi_col_ = static_cast<long>(find_column(header, bindings_.pi.column));
    for (const auto& name : bindings_.aux)
        aux_cols_.push_back(name == kPiToken ? -1 : static_cast<long>(find_column(header, name)));
    for (const auto& name : bindings_.coords) coord_cols_.push_back(find_column(header, name));
    for (const auto& name : bindings_.y) y_cols_.push_back(find_column(header, name));
}

double RowBinder::number(std::span<const std::string> fields, std::size_t col,
                         std::size_t row) const {
    double v = 0.0;
    if (!parse_double(fields[col], v))
        throw DataError("row " + std::to_string(row) + ", column '" + header_[col] +
                        "': cannot parse '" + fields[col] + "' as a finite number");
    return v;
}

Unit RowBinder::bind(std::span<const std::string> fields, std::size_t row_number) const {
    if (fields.size() != width_)
        throw DataError("row " + std::to_string(row_number) + ": expected " +
                        std::to_string(width_) + " fields, found " + std::to_string(fields.size()));
    Unit unit;
    if (id_col_ >= 0) {
        const auto text = trim(fields[static_cast<std::size_t>(id_col_)]);
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), unit.id);
        if (ec != std::errc() || ptr != text.data() + text.size())
            throw DataError("row " + std::to_string(row_number) + ": id '" + std::string(text) +
                            "' is not an integer");
    } else {
        unit.id = static_cast<UnitId>(row_number);
    }
    unit.pi = pi_col_ >= 0 ? number(fields, static_cast<std::size_t>(pi_col_), row_number)
                           : bindings_.pi.value;
    if (bindings_.pi.kind == PiBinding::Kind::column && (unit.pi < 0.0 || unit.pi > 1.0))
        throw DataError("row " + std::to_string(row_number) + ": inclusion probability " +
                        std::to_string(unit.pi) + " outside [0, 1]");
    for (auto col : aux_cols_)
        unit.aux.push_back(col < 0 ? unit.pi : number(fields, static_cast<std::size_t>(col), row_number));
    for (auto col : coord_cols_) unit.coords.push_back(number(fields, col, row_number));
    for (auto col : y_cols_) unit.y.push_back(number(fields, col, row_number));
    return unit;
}

Population load_population(std::istream& in, const ColumnBindings& bindings) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("population file has no header row");
    const auto header = split_csv_line(line);
    const RowBinder binder(header, bindings);

    std::vector<Unit> units;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        units.push_back(binder.bind(split_csv_line(line), row));
    }
    if (units.empty()) throw DataError("population file has no data rows");

    if (bindings.pi.kind == PiBinding::Kind::proportional) {
        std::vector<double> sizes;
        for (const auto& u : units) sizes.push_back(u.pi);
        const auto pis = proportional_pis(sizes, bindings.pi.n);
        for (std::size_t k = 0; k < units.size(); ++k) {
            units[k].pi = pis[k];
            for (std::size_t j = 0; j < bindings.aux.size(); ++j)
                if (bindings.aux[j] == kPiToken) units[k].aux[j] = pis[k];
        }
    }
    return validate_population(std::move(units));
}

Population load_population_csv(const std::string& path, const ColumnBindings& bindings) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open population file '" + path + "'");
    return load_population(in, bindings);
}

}  // namespace streambal
