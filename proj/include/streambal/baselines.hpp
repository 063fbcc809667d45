#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "streambal/core.hpp"
#include "streambal/rng.hpp"
#include "streambal/sampler.hpp"

namespace streambal {

enum class DesignKind {
    proposed,           // the stream balanced sampler
    local_pivotal,
    rejective_poisson,  // max-entropy reference
    poisson,
    local_cube,         // listed in reports, not implemented
};

std::string_view design_name(DesignKind kind);
std::optional<DesignKind> parse_design(std::string_view name);

struct DesignSpec {
    DesignKind kind = DesignKind::poisson;
    SamplerConfig sampler;  // proposed only; seed is replaced per replicate
    bool shuffle = false;   // proposed only: stream in a seeded random order
};

// Spread-only design: a random fractional unit and its nearest fractional
// neighbour exchange mass until every probability is 0 or 1.
SampleVector local_pivotal(const Population& pop, Rng& rng);

// Conditional Poisson of size n by rejection on the target probabilities.
// Throws ConfigError unless sum(pi) == n within 1e-6, SamplingError when
// `max_tries` draws are exhausted.
SampleVector rejective_poisson(const Population& pop, std::size_t n, Rng& rng,
                               std::size_t max_tries = 1'000'000);

SampleVector poisson(const Population& pop, Rng& rng);

}  // namespace streambal
