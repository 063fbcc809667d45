#include "streambal/baselines.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "pivotal.hpp"

namespace streambal {

std::string_view design_name(DesignKind kind) {
    switch (kind) {
        case DesignKind::proposed: return "proposed";
        case DesignKind::local_pivotal: return "local_pivotal";
        case DesignKind::rejective_poisson: return "rejective_poisson";
        case DesignKind::poisson: return "poisson";
        case DesignKind::local_cube: return "local_cube";
    }
    return "unknown";
}

std::optional<DesignKind> parse_design(std::string_view name) {
    if (name == "proposed") return DesignKind::proposed;
    if (name == "local_pivotal") return DesignKind::local_pivotal;
    if (name == "rejective_poisson" || name == "max_entropy") return DesignKind::rejective_poisson;
    if (name == "poisson") return DesignKind::poisson;
    if (name == "local_cube") return DesignKind::local_cube;
    return std::nullopt;
}

SampleVector local_pivotal(const Population& pop, Rng& rng) {
    if (!pop.has_coords()) throw ConfigError("local pivotal method requires coordinates");
    const std::size_t n = pop.size();
    std::vector<double> pi = pop.pis();

    std::vector<std::size_t> open;
    for (std::size_t k = 0; k < n; ++k)
        if (pi[k] > kTolerance && pi[k] < 1.0 - kTolerance)
            open.push_back(k);
        else
            pi[k] = pi[k] >= 1.0 - kTolerance ? 1.0 : 0.0;

    auto distance = [&](std::size_t a, std::size_t b) {
        double d = 0.0;
        const auto& za = pop.units[a].coords;
        const auto& zb = pop.units[b].coords;
        for (std::size_t i = 0; i < za.size(); ++i) d += (za[i] - zb[i]) * (za[i] - zb[i]);
        return d;
    };

    while (open.size() >= 2) {
        const std::size_t i = open[rng.below(open.size())];
        std::size_t j = n;
        double best = std::numeric_limits<double>::infinity();
        for (auto k : open) {
            if (k == i) continue;
            const double d = distance(i, k);
            if (d < best || (d == best && k < j)) {
                best = d;
                j = k;
            }
        }
        const auto [a, b] = detail::pivotal_pair(pi[i], pi[j], rng.uniform(), kTolerance);
        pi[i] = a;
        pi[j] = b;
        std::erase_if(open, [&](std::size_t k) { return pi[k] == 0.0 || pi[k] == 1.0; });
    }
    if (open.size() == 1) pi[open[0]] = rng.uniform() < pi[open[0]] ? 1.0 : 0.0;

    std::vector<std::uint8_t> a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = pi[k] == 1.0 ? 1 : 0;
    return SampleVector(std::move(a));
}

SampleVector rejective_poisson(const Population& pop, std::size_t n, Rng& rng,
                               std::size_t max_tries) {
    const double total = pop.pi_total();
    if (std::abs(total - static_cast<double>(n)) > 1e-6)
        throw ConfigError("rejective Poisson needs sum(pi) = n; got sum " + std::to_string(total) +
                          " for n = " + std::to_string(n));
    std::vector<std::uint8_t> a(pop.size());
    for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
        std::size_t size = 0;
        for (std::size_t k = 0; k < pop.size(); ++k) {
            a[k] = rng.uniform() < pop.units[k].pi ? 1 : 0;
            size += a[k];
        }
        if (size == n) return SampleVector(a);
    }
    throw SamplingError("rejective Poisson exceeded " + std::to_string(max_tries) + " attempts");
}

SampleVector poisson(const Population& pop, Rng& rng) {
    std::vector<std::uint8_t> a(pop.size());
    for (std::size_t k = 0; k < pop.size(); ++k) a[k] = rng.uniform() < pop.units[k].pi ? 1 : 0;
    return SampleVector(std::move(a));
}

}  // namespace streambal
