#include "streambal/spread.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace streambal {

namespace {

double squared_distance(const Unit& a, const Unit& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.coords.size(); ++i)
        d += (a.coords[i] - b.coords[i]) * (a.coords[i] - b.coords[i]);
    return d;
}

void require_coords(const Population& pop) {
    if (!pop.has_coords()) throw ConfigError("spatial measure requires coordinates");
}

}  // namespace

ContiguityMatrix ContiguityMatrix::from_rows(std::vector<std::vector<Entry>> rows) {
    ContiguityMatrix w;
    const std::size_t n = rows.size();
    w.row_sums_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        auto& row = rows[k];
        std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
        for (const auto& e : row) {
            if (e.col >= n) throw DimensionError("weight column out of range");
            if (e.col == k) throw ValidationError("contiguity matrix must have a zero diagonal");
            if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
                throw ValidationError("contiguity weights must be finite and nonnegative");
            if (e.weight == 0.0) continue;
            w.entries_.push_back(e);
            w.row_sums_[k] += e.weight;
        }
        if (w.row_sums_[k] <= 0.0)
            throw ValidationError("row " + std::to_string(k) + " of the contiguity matrix is empty");
        w.row_ptr_.push_back(w.entries_.size());
    }
    w.total_ = compensated_sum(w.row_sums_);
    return w;
}

std::vector<double> ContiguityMatrix::dense() const {
    const std::size_t n = size();
    std::vector<double> out(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (const auto& e : row(k)) out[k * n + e.col] = e.weight;
    return out;
}

std::vector<double> voronoi_masses(const Population& pop, const SampleVector& sample) {
    require_coords(pop);
    if (sample.size() != pop.size()) throw DimensionError("sample not aligned with population");
    std::vector<std::size_t> selected;
    for (std::size_t k = 0; k < pop.size(); ++k)
        if (sample.selected(k)) selected.push_back(k);
    if (selected.empty()) throw DomainError("Voronoi balance needs a non-empty sample");

    std::vector<double> mass(selected.size(), 0.0);
    std::vector<std::size_t> nearest;
    for (std::size_t k = 0; k < pop.size(); ++k) {
        double best = std::numeric_limits<double>::infinity();
        nearest.clear();
        for (std::size_t s = 0; s < selected.size(); ++s) {
            const double d = squared_distance(pop.units[k], pop.units[selected[s]]);
            if (d < best) {
                best = d;
                nearest.assign(1, s);
            } else if (d == best) {
                nearest.push_back(s);
            }
        }
        const double share = pop.units[k].pi / static_cast<double>(nearest.size());
        for (auto s : nearest) mass[s] += share;
    }
    return mass;
}

double voronoi_balance_B(const Population& pop, const SampleVector& sample) {
    const auto mass = voronoi_masses(pop, sample);
    double total = 0.0;
    for (double b : mass) total += (b - 1.0) * (b - 1.0);
    return total / static_cast<double>(mass.size());
}

ContiguityMatrix build_contiguity_matrix(const Population& pop) {
    require_coords(pop);
    const std::size_t n = pop.size();
    if (n < 2) throw DomainError("contiguity matrix needs at least two units");

    std::vector<std::vector<ContiguityMatrix::Entry>> rows(n);
    std::vector<std::size_t> order(n - 1);
    std::vector<double> dist(n);
    for (std::size_t k = 0; k < n; ++k) {
        order.clear();
        for (std::size_t l = 0; l < n; ++l) {
            if (l == k) continue;
            dist[l] = squared_distance(pop.units[k], pop.units[l]);
            order.push_back(l);
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
        });

        double mass = 0.0;
        for (auto l : order) {
            const double pi = pop.units[l].pi;
            if (mass + pi >= 1.0 - 1e-12) {
                rows[k].push_back({l, std::min(1.0, (1.0 - mass) / pi)});
                break;
            }
            rows[k].push_back({l, 1.0});
            mass += pi;
        }
    }
    return ContiguityMatrix::from_rows(std::move(rows));
}

double moran_I(const SampleVector& sample, const ContiguityMatrix& w) {
    const std::size_t n = w.size();
    if (sample.size() != n) throw DimensionError("sample not aligned with contiguity matrix");
    const std::size_t count = sample.count();
    if (count == 0 || count == n)
        throw DegenerateVarianceError("Moran I undefined for a constant sample");

    const auto d = w.row_sums();
    const double s0 = w.total();

    // a_w = a^T W 1 / 1^T W 1
    double aw = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (sample.selected(k)) aw += d[k];
    aw /= s0;

    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) e[k] = (sample.selected(k) ? 1.0 : 0.0) - aw;

    std::vector<double> we(n, 0.0);
    std::vector<double> col_sums(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (const auto& entry : w.row(k)) {
            we[k] += entry.weight * e[entry.col];
            col_sums[entry.col] += entry.weight;
        }

    double numerator = 0.0;
    double quad_d = 0.0;
    double colsum_e = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        numerator += e[k] * we[k];
        quad_d += d[k] * e[k] * e[k];
        colsum_e += col_sums[k] * e[k];
    }

    // e^T G e = (Ce)^T D (Ce) with Ce = D^-1 W e - 1 (1^T W e) / s0
    double quad_g = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double ce = we[k] / d[k] - colsum_e / s0;
        quad_g += d[k] * ce * ce;
    }

    // e'Ge and e'De carry the same units; a ratio at rounding level means the
    // exact value is zero and the quotient would be noise.
    if (!(quad_d > 0.0) || !(quad_g > 1e-12 * quad_d))
        throw DegenerateVarianceError("Moran I denominator is zero");
    const double denominator = std::sqrt(quad_d * quad_g);
    return numerator / denominator;
}

}  // namespace streambal
