#include "streambal/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pivotal.hpp"
#include "streambal/lp.hpp"

namespace streambal {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

bool is_integer(double pi) { return pi == 0.0 || pi == 1.0; }

}  // namespace

std::string_view phase_name(Phase phase) {
    switch (phase) {
        case Phase::flight: return "flight";
        case Phase::landing: return "landing";
        case Phase::pre_decided: return "pre-decided";
    }
    return "unknown";
}

std::string to_log_line(const DecisionRecord& r) {
    std::string line = std::to_string(r.step);
    line += ',';
    line += std::to_string(r.unit_id);
    line += ',';
    line += std::to_string(r.outcome);
    line += ',';
    line += phase_name(r.phase);
    line += ',';
    line += std::to_string(r.j_used);
    return line;
}

std::optional<std::size_t> select_pivot(std::span<const PoolEntry> pool) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].deferred) continue;
        if (!best || pool[i].pi > pool[*best].pi ||
            (pool[i].pi == pool[*best].pi && pool[i].stream_index < pool[*best].stream_index))
            best = i;
    }
    return best;
}

std::vector<std::size_t> reorder_candidates(std::span<const PoolEntry> pool, std::size_t pivot,
                                            bool spatial) {
    std::vector<std::size_t> order;
    order.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (i != pivot) order.push_back(i);

    if (!spatial) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return pool[a].stream_index < pool[b].stream_index;
        });
        return order;
    }

    const auto& origin = pool[pivot].unit.coords;
    std::vector<double> dist(pool.size(), 0.0);
    for (auto i : order) dist[i] = squared_distance(pool[i].unit.coords, origin);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return pool[a].stream_index < pool[b].stream_index;
    });
    return order;
}

void update_candidates(double q, std::span<double> candidate_pi, std::span<const double> v,
                       Branch branch, double tolerance) {
    if (candidate_pi.size() != v.size())
        throw DimensionError("compensation vector does not match the candidates");
    const double shrink = (1.0 - q) / q;
    for (std::size_t k = 0; k < v.size(); ++k) {
        double next = branch == Branch::reject ? candidate_pi[k] + v[k]
                                               : candidate_pi[k] - shrink * v[k];
        if (next < -tolerance || next > 1.0 + tolerance)
            throw InvariantError("updated probability " + std::to_string(next) +
                                 " leaves [0, 1]");
        if (next <= tolerance) next = 0.0;
        if (next >= 1.0 - tolerance) next = 1.0;
        candidate_pi[k] = next;
    }
}

StreamSampler::StreamSampler(SamplerConfig config, std::size_t p, std::size_t q)
    : config_(config), p_(p), q_(q), spatial_(false), rng_(config.seed) {
    if (config_.initial_j == 0) config_.initial_j = p + 1;
    if (config_.max_j == 0) config_.max_j = config_.window;
    if (config_.window == 0) throw ConfigError("window must be positive");
    if (config_.initial_j <= p)
        throw ConfigError("initial J must exceed the number of auxiliary variables (" +
                          std::to_string(p) + ")");
    if (config_.max_j < config_.initial_j || config_.max_j > config_.window)
        throw ConfigError("J bounds must satisfy initial J <= max J <= window");
    if (!(config_.integer_tolerance >= 0.0 && config_.integer_tolerance < 0.5))
        throw ConfigError("integer tolerance must lie in [0, 0.5)");
    spatial_ = config_.spatial_reordering.value_or(q > 0);
    if (spatial_ && q == 0) throw ConfigError("spatial reordering needs coordinates");

    decided_sum_.assign(p, 0.0);
    decided_carry_.assign(p, 0.0);
    pi_column_.assign(p, true);
    all_columns_.resize(p);
    std::iota(all_columns_.begin(), all_columns_.end(), std::size_t{0});
}

std::vector<DecisionRecord> StreamSampler::push(Unit unit) {
    if (finished_) throw ConfigError("cannot push after finish()");
    if (unit.aux.size() != p_)
        throw DimensionError("unit " + std::to_string(unit.id) + ": auxiliary length " +
                             std::to_string(unit.aux.size()) + ", sampler expects " +
                             std::to_string(p_));
    if (unit.coords.size() != q_)
        throw DimensionError("unit " + std::to_string(unit.id) + ": coordinate length " +
                             std::to_string(unit.coords.size()) + ", sampler expects " +
                             std::to_string(q_));
    if (!(unit.pi > 0.0 && unit.pi <= 1.0))
        throw ValidationError("unit " + std::to_string(unit.id) +
                              ": inclusion probability must lie in (0, 1]");

    const double tol = config_.integer_tolerance;
    PoolEntry entry;
    entry.stream_index = seen_ids_.size();
    entry.aux_over_pi.resize(p_);
    for (std::size_t c = 0; c < p_; ++c) {
        entry.aux_over_pi[c] = unit.aux[c] / unit.pi;
        if (std::abs(unit.aux[c] - unit.pi) > 1e-12 * std::max(1.0, unit.pi))
            pi_column_[c] = false;
    }
    entry.pi = unit.pi;
    seen_ids_.push_back(unit.id);
    outcomes_.push_back(-1);
    entry.unit = std::move(unit);

    if (entry.pi >= 1.0 - tol || entry.pi <= tol) {
        entry.pi = entry.pi >= 1.0 - tol ? 1.0 : 0.0;
        pool_.push_back(std::move(entry));
        std::vector<DecisionRecord> out;
        evict_integers(out, pool_.size() - 1, 0, Phase::pre_decided);
        return out;
    }

    pool_.push_back(std::move(entry));
    clear_deferred();

    std::vector<DecisionRecord> out;
    while (pool_.size() >= config_.window) {
        auto result = step();
        if (result.status == StepStatus::decided) {
            out.insert(out.end(), result.records.begin(), result.records.end());
        } else if (result.status == StepStatus::idle) {
            auto forced = forced_landing();
            out.insert(out.end(), forced.begin(), forced.end());
        }
    }
    return out;
}

StepResult StreamSampler::step() { return step_with(all_columns_, Phase::flight); }

StepResult StreamSampler::step_with(const std::vector<std::size_t>& columns, Phase phase) {
    StepResult result;
    const auto pivot = select_pivot(pool_);
    if (!pivot) return result;

    std::vector<double> before;
    if (observer_) before = balance_total();

    const auto order = reorder_candidates(pool_, *pivot, spatial_);
    const double q = pool_[*pivot].pi;
    const auto& pivot_aux = pool_[*pivot].aux_over_pi;

    std::size_t j_used = 0;
    std::vector<double> v;
    if (columns.empty()) {
        j_used = 1;
    } else {
        std::size_t j_start = columns.size() + 1;
        if (columns.size() == p_) j_start = std::max(j_start, config_.initial_j);
        const std::size_t j_cap = std::min(config_.max_j, pool_.size());

        lp::FlightLpProblem problem;
        problem.pivot_pi = q;
        for (auto c : columns) problem.target.push_back(pivot_aux[c] * q);

        // The problem is rebuilt at every J: costs depend on J.
        for (std::size_t j = j_start; j <= j_cap; ++j) {
            problem.candidates.clear();
            for (std::size_t r = 1; r < j; ++r) {
                const auto& cand = pool_[order[r - 1]];
                lp::Candidate c;
                c.pi = cand.pi;
                for (auto col : columns) c.aux_over_pi.push_back(cand.aux_over_pi[col]);
                c.cost = config_.cost_rule == CostRule::rank ? static_cast<double>(j - r)
                                                             : static_cast<double>(j - r - 1);
                problem.candidates.push_back(std::move(c));
            }
            auto solution = lp::solve(problem);
            if (solution.feasible()) {
                j_used = j;
                v = std::move(solution.v);
                break;
            }
        }
    }

    if (j_used == 0) {
        pool_[*pivot].deferred = true;
        result.status = StepStatus::landing_required;
        return result;
    }

    const std::vector<std::size_t> candidates(order.begin(),
                                              order.begin() + static_cast<long>(j_used - 1));
    apply_update(*pivot, candidates, v);
    ++stats_.steps;
    ++event_;
    stats_.j_total += j_used;

    result.status = StepStatus::decided;
    result.j_used = j_used;
    evict_integers(result.records, *pivot, j_used, phase);

    if (observer_) {
        StepTrace trace;
        trace.step = result.records.front().step;
        trace.j_used = j_used;
        trace.phase = phase;
        trace.active_columns = columns;
        trace.balance_before = std::move(before);
        trace.balance_after = balance_total();
        observer_(trace);
    }
    return result;
}

Branch StreamSampler::apply_update(std::size_t pivot, std::span<const std::size_t> candidates,
                                   std::span<const double> v) {
    if (candidates.size() != v.size())
        throw DimensionError("compensation vector does not match the candidates");
    const double tol = config_.integer_tolerance;
    const double q = pool_.at(pivot).pi;

    std::vector<double> pis;
    pis.reserve(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const double pi_k = pool_.at(candidates[k]).pi;
        const auto bounds = lp::bounds_for(q, pi_k);
        if (v[k] < bounds.lo - tol || v[k] > bounds.hi + tol)
            throw InvariantError("compensation outside its admissible bounds");
        pis.push_back(pi_k);
    }

    const Branch branch = rng_.uniform() < q ? Branch::select : Branch::reject;
    update_candidates(q, pis, v, branch, tol);
    for (std::size_t k = 0; k < candidates.size(); ++k) pool_[candidates[k]].pi = pis[k];
    pool_[pivot].pi = branch == Branch::select ? 1.0 : 0.0;
    return branch;
}

FinishResult StreamSampler::finish() {
    if (finished_) throw ConfigError("finish() called twice");
    finished_ = true;

    FinishResult out;
    auto columns = all_columns_;
    Phase phase = Phase::flight;
    for (;;) {
        for (;;) {
            auto result = step_with(columns, phase);
            if (result.status == StepStatus::decided)
                out.records.insert(out.records.end(), result.records.begin(),
                                   result.records.end());
            else if (result.status == StepStatus::idle)
                break;
        }
        if (pool_.empty()) break;

        stats_.landing_invoked = true;
        auto reduced = drop_column(columns);
        if (!reduced) {
            clear_deferred();
            while (!pool_.empty()) {
                auto records = fallback_pair(Phase::landing);
                out.records.insert(out.records.end(), records.begin(), records.end());
            }
            break;
        }
        columns = std::move(*reduced);
        ++stats_.columns_dropped;
        clear_deferred();
        phase = Phase::landing;
    }

    std::vector<std::uint8_t> a;
    a.reserve(outcomes_.size());
    for (int o : outcomes_) {
        if (o < 0) throw InvariantError("unit left undecided after landing");
        a.push_back(static_cast<std::uint8_t>(o));
    }
    out.sample = SampleVector(std::move(a));
    out.ids = seen_ids_;
    return out;
}

std::vector<DecisionRecord> StreamSampler::forced_landing() {
    stats_.landing_invoked = true;
    auto columns = all_columns_;
    while (auto reduced = drop_column(columns)) {
        columns = std::move(*reduced);
        clear_deferred();
        for (;;) {
            auto result = step_with(columns, Phase::landing);
            if (result.status == StepStatus::decided) {
                clear_deferred();
                return result.records;
            }
            if (result.status == StepStatus::idle) break;
        }
    }
    clear_deferred();
    return fallback_pair(Phase::landing);
}

// Decides at least one pool unit without the LP. With a protected pi column
// the pair exchange keeps the running sample size exact.
std::vector<DecisionRecord> StreamSampler::fallback_pair(Phase phase) {
    std::vector<DecisionRecord> out;
    const auto pivot = select_pivot(pool_);
    if (!pivot) return out;
    ++stats_.fallback_decisions;
    ++event_;

    std::size_t j_used = 1;
    if (pool_.size() >= 2 && has_protected(all_columns_)) {
        const auto partner = reorder_candidates(pool_, *pivot, spatial_).front();
        const auto [a, b] = detail::pivotal_pair(pool_[*pivot].pi, pool_[partner].pi,
                                                 rng_.uniform(), config_.integer_tolerance);
        pool_[*pivot].pi = a;
        pool_[partner].pi = b;
        j_used = 2;
    } else {
        pool_[*pivot].pi = rng_.uniform() < pool_[*pivot].pi ? 1.0 : 0.0;
    }
    evict_integers(out, *pivot, j_used, phase);
    return out;
}

std::optional<std::vector<std::size_t>> StreamSampler::drop_column(
    const std::vector<std::size_t>& columns) const {
    for (std::size_t i = columns.size(); i-- > 0;) {
        const auto c = columns[i];
        if (config_.protect_pi_column && pi_column_[c]) continue;
        auto reduced = columns;
        reduced.erase(reduced.begin() + static_cast<long>(i));
        return reduced;
    }
    return std::nullopt;
}

bool StreamSampler::has_protected(const std::vector<std::size_t>& columns) const {
    if (!config_.protect_pi_column) return false;
    return std::any_of(columns.begin(), columns.end(), [&](std::size_t c) { return pi_column_[c]; });
}

void StreamSampler::clear_deferred() {
    for (auto& e : pool_) e.deferred = false;
}

DecisionRecord StreamSampler::decide(std::size_t pool_index, std::size_t j_used, Phase phase) {
    const auto& entry = pool_[pool_index];
    const int outcome = entry.pi == 1.0 ? 1 : 0;
    outcomes_[entry.stream_index] = outcome;
    if (outcome == 1) {
        for (std::size_t c = 0; c < p_; ++c) {
            // Neumaier update of the decided contribution.
            const double x = entry.aux_over_pi[c];
            const double t = decided_sum_[c] + x;
            if (std::abs(decided_sum_[c]) >= std::abs(x))
                decided_carry_[c] += (decided_sum_[c] - t) + x;
            else
                decided_carry_[c] += (x - t) + decided_sum_[c];
            decided_sum_[c] = t;
        }
    }
    DecisionRecord record{entry.unit.id, outcome, event_, j_used, phase};
    log_.push_back(record);
    return record;
}

void StreamSampler::evict_integers(std::vector<DecisionRecord>& out, std::size_t first,
                                   std::size_t j_used, Phase phase) {
    if (is_integer(pool_[first].pi)) out.push_back(decide(first, j_used, phase));
    for (std::size_t i = 0; i < pool_.size(); ++i)
        if (i != first && is_integer(pool_[i].pi)) out.push_back(decide(i, j_used, phase));
    std::erase_if(pool_, [](const PoolEntry& e) { return is_integer(e.pi); });
}

std::vector<double> StreamSampler::balance_total() const {
    std::vector<double> total(p_);
    for (std::size_t c = 0; c < p_; ++c) {
        std::vector<double> terms{decided_sum_[c], decided_carry_[c]};
        for (const auto& e : pool_) terms.push_back(e.aux_over_pi[c] * e.pi);
        total[c] = compensated_sum(terms);
    }
    return total;
}

}  // namespace streambal
