#include "streambal/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace streambal {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string unit_label(UnitId id) { return "unit " + std::to_string(id); }

}  // namespace

std::vector<double> Population::pis() const {
    std::vector<double> out;
    out.reserve(units.size());
    for (const auto& u : units) out.push_back(u.pi);
    return out;
}

double Population::pi_total() const {
    const auto values = pis();
    return compensated_sum(values);
}

SampleVector::SampleVector(std::vector<std::uint8_t> a) : a_(std::move(a)) {
    for (auto v : a_)
        if (v > 1) throw ValidationError("sample vector entries must be 0 or 1");
}

std::size_t SampleVector::count() const {
    std::size_t n = 0;
    for (auto v : a_) n += v;
    return n;
}

Population validate_population(std::vector<Unit> raw) {
    if (raw.empty()) throw ValidationError("population is empty");

    Population pop;
    pop.p = raw.front().aux.size();
    pop.q = raw.front().coords.size();

    std::vector<UnitId> ids;
    ids.reserve(raw.size());
    for (auto& unit : raw) {
        if (unit.aux.size() != pop.p)
            throw DimensionError(unit_label(unit.id) + ": auxiliary vector has length " +
                                 std::to_string(unit.aux.size()) + ", expected " +
                                 std::to_string(pop.p));
        if (unit.coords.size() != pop.q)
            throw DimensionError(unit_label(unit.id) + ": coordinate vector has length " +
                                 std::to_string(unit.coords.size()) + ", expected " +
                                 std::to_string(pop.q));
        if (!std::isfinite(unit.pi) || unit.pi < 0.0 || unit.pi > 1.0)
            throw ValidationError(unit_label(unit.id) + ": inclusion probability " +
                                  std::to_string(unit.pi) + " outside [0, 1]");
        if (!all_finite(unit.aux) || !all_finite(unit.coords) || !all_finite(unit.y))
            throw ValidationError(unit_label(unit.id) + ": non-finite value");
        ids.push_back(unit.id);

        if (unit.pi == 0.0) {
            pop.dropped_zero_pi.push_back(unit.id);
            continue;
        }
        pop.units.push_back(std::move(unit));
    }

    std::sort(ids.begin(), ids.end());
    if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end())
        throw ValidationError(unit_label(*dup) + ": duplicate id");
    if (pop.units.empty()) throw ValidationError("every unit has zero inclusion probability");

    const std::size_t ny = pop.units.front().y.size();
    for (const auto& unit : pop.units)
        if (unit.y.size() != ny)
            throw DimensionError(unit_label(unit.id) + ": inconsistent number of y variables");
    return pop;
}

double ht_estimate(const SampleVector& sample, const Population& pop, std::size_t var_index) {
    if (sample.size() != pop.size())
        throw DimensionError("sample vector not aligned with population");
    std::vector<double> terms;
    for (std::size_t k = 0; k < pop.size(); ++k) {
        const auto& unit = pop.units[k];
        if (var_index >= unit.y.size())
            throw ConfigError("variable of interest " + std::to_string(var_index) +
                              " missing for " + unit_label(unit.id));
        if (sample.selected(k)) terms.push_back(unit.y[var_index] / unit.pi);
    }
    return compensated_sum(terms);
}

std::vector<double> balance_residual(const Population& pop, std::span<const double> probs) {
    if (probs.size() != pop.size())
        throw DimensionError("probability vector not aligned with population");
    std::vector<double> residual(pop.p, 0.0);
    for (std::size_t j = 0; j < pop.p; ++j) {
        std::vector<double> terms;
        terms.reserve(2 * pop.size());
        for (std::size_t k = 0; k < pop.size(); ++k) {
            const auto& unit = pop.units[k];
            terms.push_back(unit.aux[j] / unit.pi * probs[k]);
            terms.push_back(-unit.aux[j]);
        }
        residual[j] = compensated_sum(terms);
    }
    return residual;
}

double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    return sum + carry;
}

double true_total(const Population& pop, std::size_t var_index) {
    std::vector<double> values;
    values.reserve(pop.size());
    for (const auto& unit : pop.units) {
        if (var_index >= unit.y.size())
            throw ConfigError("variable of interest " + std::to_string(var_index) + " missing");
        values.push_back(unit.y[var_index]);
    }
    return compensated_sum(values);
}

}  // namespace streambal
