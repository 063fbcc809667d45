#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "streambal/core.hpp"

namespace streambal {

// Sparse N x N spatial weights in compressed-row form. Construction checks
// the zero diagonal, nonnegativity, and that every row carries weight.
class ContiguityMatrix {
public:
    struct Entry {
        std::size_t col;
        double weight;
    };

    ContiguityMatrix() = default;
    static ContiguityMatrix from_rows(std::vector<std::vector<Entry>> rows);

    std::size_t size() const { return row_sums_.size(); }
    std::span<const Entry> row(std::size_t k) const {
        return {entries_.data() + row_ptr_[k], row_ptr_[k + 1] - row_ptr_[k]};
    }
    std::span<const double> row_sums() const { return row_sums_; }
    double total() const { return total_; }
    std::vector<double> dense() const;

private:
    std::vector<std::size_t> row_ptr_{0};
    std::vector<Entry> entries_;
    std::vector<double> row_sums_;
    double total_ = 0.0;
};

// pi-mass of the nearest-sampled-unit cell of every selected unit, in
// population order. Equidistant sampled units split the mass equally.
std::vector<double> voronoi_masses(const Population& pop, const SampleVector& sample);

// (1/n) sum_i (b_i - 1)^2 over the Voronoi masses above.
double voronoi_balance_B(const Population& pop, const SampleVector& sample);

// Row k: unit weight on the nearest neighbours (distance, then index) until
// their pi-sum reaches 1, the last one weighted fractionally so the
// pi-weighted row sum is exactly 1.
ContiguityMatrix build_contiguity_matrix(const Population& pop);

// Normalised Moran I of the sample indicator under W.
double moran_I(const SampleVector& sample, const ContiguityMatrix& w);

}  // namespace streambal
