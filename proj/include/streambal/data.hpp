#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streambal/core.hpp"

namespace streambal {

// Auxiliary-column token that stands for the resolved inclusion probability.
inline constexpr std::string_view kPiToken = "@pi";

struct PiBinding {
    enum class Kind { fixed, column, proportional };
    Kind kind = Kind::fixed;
    double value = 0.0;  // fixed
    std::string column;  // column, proportional
    double n = 0.0;      // proportional: target sample size
};

// "fixed:V" | "col:NAME" | "prop:NAME,n=N"
PiBinding parse_pi_binding(std::string_view text);
std::string to_string(const PiBinding& binding);

struct ColumnBindings {
    PiBinding pi;
    std::vector<std::string> aux{std::string(kPiToken)};
    std::vector<std::string> coords;
    std::vector<std::string> y;
    std::string id_column;  // empty: "id" when present, else the 1-based row number
};

// Comma-separated list; empty input or "none" gives an empty list.
std::vector<std::string> split_list(std::string_view text);

// One CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

// pi_k = n t_k / sum(t), with units reaching 1 fixed at 1 and the rest
// rescaled to the remaining size until no value exceeds 1.
std::vector<double> proportional_pis(std::span<const double> sizes, double n);

// Resolves bindings against a header and converts records to Units.
class RowBinder {
public:
    RowBinder(std::span<const std::string> header, ColumnBindings bindings);

    // row_number is 1-based over data rows. With proportional bindings the
    // returned pi is the raw size measure; finalise with proportional_pis.
    Unit bind(std::span<const std::string> fields, std::size_t row_number) const;

    const ColumnBindings& bindings() const { return bindings_; }
    std::size_t width() const { return width_; }

private:
    double number(std::span<const std::string> fields, std::size_t col, std::size_t row) const;

    ColumnBindings bindings_;
    std::vector<std::string> header_;
    std::size_t width_ = 0;
    long id_col_ = -1;
    long pi_col_ = -1;
    std::vector<long> aux_cols_;  // -1 marks the pi token
    std::vector<std::size_t> coord_cols_;
    std::vector<std::size_t> y_cols_;
};

// Reads a whole table, applies bindings, and validates. Proportional
// probabilities are capped after all rows are read.
Population load_population(std::istream& in, const ColumnBindings& bindings);
Population load_population_csv(const std::string& path, const ColumnBindings& bindings);

}  // namespace streambal
