#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streambal/core.hpp"
#include "streambal/rng.hpp"

namespace streambal {

// Cost attached to the candidate of rank r (1 = closest) when J units take
// part in a step. Both decrease with r.
enum class CostRule {
    rank,      // J - r
    position,  // J - (r + 1): the pivot counted as position 1
};

struct SamplerConfig {
    std::size_t window = 0;     // pool capacity M
    std::size_t initial_j = 0;  // 0 selects p + 1
    std::size_t max_j = 0;      // 0 selects the window
    std::optional<bool> spatial_reordering;  // unset: on iff coordinates exist
    std::uint64_t seed = 0;
    double integer_tolerance = kTolerance;
    CostRule cost_rule = CostRule::rank;
    // Keep auxiliary columns equal to pi through landing (fixed sample size).
    bool protect_pi_column = true;
};

enum class Phase { flight, landing, pre_decided };

std::string_view phase_name(Phase phase);

struct DecisionRecord {
    UnitId unit_id = 0;
    int outcome = 0;
    std::size_t step = 0;
    std::size_t j_used = 0;
    Phase phase = Phase::flight;

    friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

// "step,unit_id,outcome,phase,J_used"
std::string to_log_line(const DecisionRecord& record);

struct PoolEntry {
    Unit unit;
    std::vector<double> aux_over_pi;  // x_k / pi_k with the original pi_k
    double pi = 0.0;                  // current probability
    std::size_t stream_index = 0;
    bool deferred = false;
};

// Largest current probability among non-deferred entries, ties to the
// earliest arrival. Empty when every entry is deferred.
std::optional<std::size_t> select_pivot(std::span<const PoolEntry> pool);

// Every other pool index, nearest first (ties by arrival), or in arrival
// order when `spatial` is false.
std::vector<std::size_t> reorder_candidates(std::span<const PoolEntry> pool, std::size_t pivot,
                                            bool spatial);

enum class Branch { reject, select };

// Applies one branch of the pivot update to candidate probabilities in place:
// reject adds v_k, select subtracts (1 - q) / q * v_k. Results within
// `tolerance` of 0 or 1 snap to the integer.
void update_candidates(double q, std::span<double> candidate_pi, std::span<const double> v,
                       Branch branch, double tolerance);

enum class StepStatus {
    decided,           // pivot decided, records emitted
    landing_required,  // no feasible J for the chosen pivot; it is now deferred
    idle,              // pool empty or every entry deferred
};

struct StepResult {
    StepStatus status = StepStatus::idle;
    std::size_t j_used = 0;
    std::vector<DecisionRecord> records;  // pivot first
};

struct SamplerStats {
    std::size_t steps = 0;
    std::size_t j_total = 0;
    std::size_t columns_dropped = 0;
    std::size_t fallback_decisions = 0;
    bool landing_invoked = false;

    double mean_j() const { return steps == 0 ? 0.0 : static_cast<double>(j_total) / steps; }
};

// Emitted after every decided step when an observer is attached.
struct StepTrace {
    std::size_t step = 0;
    std::size_t j_used = 0;
    Phase phase = Phase::flight;
    std::vector<std::size_t> active_columns;
    std::vector<double> balance_before;
    std::vector<double> balance_after;
};

struct FinishResult {
    SampleVector sample;            // every unit seen, stream order
    std::vector<UnitId> ids;        // aligned with `sample`
    std::vector<DecisionRecord> records;  // decisions emitted by finish()
};

// Sequential balanced sampler. Units are pushed one at a time; once the pool
// holds `window` units the flight runs until a slot frees up. finish() drains
// the pool, landing by suppression of balancing columns when the flight stalls.
//
// Single writer: calls must be serialised by the owner.
class StreamSampler {
public:
    StreamSampler(SamplerConfig config, std::size_t p, std::size_t q);

    std::vector<DecisionRecord> push(Unit unit);
    StepResult step();
    Branch apply_update(std::size_t pivot, std::span<const std::size_t> candidates,
                        std::span<const double> v);
    FinishResult finish();

    const SamplerConfig& config() const { return config_; }
    const std::vector<PoolEntry>& pool() const { return pool_; }
    const std::vector<DecisionRecord>& decisions() const { return log_; }
    const SamplerStats& stats() const { return stats_; }
    bool finished() const { return finished_; }

    // Per auxiliary column: sum over seen units of (x_k / pi_k) times the
    // current probability (pool) or the decision (decided units).
    std::vector<double> balance_total() const;

    void set_observer(std::function<void(const StepTrace&)> observer) {
        observer_ = std::move(observer);
    }

private:
    StepResult step_with(const std::vector<std::size_t>& columns, Phase phase);
    std::vector<DecisionRecord> forced_landing();
    std::vector<DecisionRecord> fallback_pair(Phase phase);
    std::optional<std::vector<std::size_t>> drop_column(const std::vector<std::size_t>& columns) const;
    bool has_protected(const std::vector<std::size_t>& columns) const;
    void clear_deferred();
    DecisionRecord decide(std::size_t pool_index, std::size_t j_used, Phase phase);
    void evict_integers(std::vector<DecisionRecord>& out, std::size_t first, std::size_t j_used,
                        Phase phase);

    SamplerConfig config_;
    std::size_t p_;
    std::size_t q_;
    bool spatial_;
    Rng rng_;
    std::vector<PoolEntry> pool_;
    std::vector<DecisionRecord> log_;
    std::vector<UnitId> seen_ids_;
    std::vector<int> outcomes_;  // -1 while undecided
    std::vector<double> decided_sum_;
    std::vector<double> decided_carry_;
    std::vector<bool> pi_column_;
    std::vector<std::size_t> all_columns_;
    SamplerStats stats_;
    std::size_t event_ = 0;  // numbering for DecisionRecord::step
    bool finished_ = false;
    std::function<void(const StepTrace&)> observer_;
};

}  // namespace streambal
