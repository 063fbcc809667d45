#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "streambal/errors.hpp"

namespace streambal {

using UnitId = std::int64_t;

// Absolute tolerance for residual and integrality comparisons.
inline constexpr double kTolerance = 1e-9;

struct Unit {
    UnitId id = 0;
    double pi = 0.0;
    std::vector<double> aux;     // x_k, length p
    std::vector<double> coords;  // z_k, length q (empty when the population has none)
    std::vector<double> y;       // variables of interest, only read by the harness
};

struct Population {
    std::vector<Unit> units;  // stream order
    std::size_t p = 0;
    std::size_t q = 0;
    std::vector<UnitId> dropped_zero_pi;  // removed by validation, never sampled

    std::size_t size() const { return units.size(); }
    bool has_coords() const { return q > 0; }
    // pi == 1 units bypass the flight and are always selected.
    bool pre_decided(std::size_t k) const { return units[k].pi >= 1.0; }
    std::vector<double> pis() const;
    double pi_total() const;
};

// Realised sample, aligned with a Population's unit order.
class SampleVector {
public:
    SampleVector() = default;
    explicit SampleVector(std::vector<std::uint8_t> a);

    std::size_t size() const { return a_.size(); }
    std::size_t count() const;
    bool selected(std::size_t k) const { return a_[k] != 0; }
    std::span<const std::uint8_t> values() const { return a_; }

    friend bool operator==(const SampleVector&, const SampleVector&) = default;

private:
    std::vector<std::uint8_t> a_;
};

// Checks dimensions and ranges, drops pi == 0 units (recording their ids).
Population validate_population(std::vector<Unit> raw);

// Horvitz-Thompson estimate of the total of y[var_index].
double ht_estimate(const SampleVector& sample, const Population& pop, std::size_t var_index);

// sum_k (x_k / pi_k) * probs_k - sum_k x_k, one entry per auxiliary column.
std::vector<double> balance_residual(const Population& pop, std::span<const double> probs);

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

// Total of y[var_index] over the population, compensated.
double true_total(const Population& pop, std::size_t var_index);

}  // namespace streambal
