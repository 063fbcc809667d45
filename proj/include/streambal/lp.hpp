#pragma once

#include <cstddef>
#include <vector>

namespace streambal::lp {

// Feasibility tolerance on constraint residuals and on phase-1 objective.
inline constexpr double kFeasibilityTol = 1e-9;

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
};

// Admissible range of the compensation v_k given the pivot's current
// probability and the candidate's current probability. Both ends keep the
// candidate inside [0, 1] whichever way the pivot is decided, so lo <= 0 <= hi.
// Throws DomainError unless both probabilities lie strictly inside (0, 1).
Bounds bounds_for(double pivot_pi, double pi_k);

struct Candidate {
    double pi = 0.0;                  // current probability
    std::vector<double> aux_over_pi;  // x_k / pi_k with the original pi_k
    double cost = 0.0;
};

// maximize sum_k cost_k v_k
// s.t.     sum_k aux_over_pi_k v_k = target
//          bounds_for(pivot_pi, pi_k).lo <= v_k <= bounds_for(pivot_pi, pi_k).hi
struct FlightLpProblem {
    double pivot_pi = 0.0;
    std::vector<Candidate> candidates;
    std::vector<double> target;
};

enum class Status { feasible, infeasible };

struct FlightLpSolution {
    std::vector<double> v;
    double objective = 0.0;
    Status status = Status::infeasible;

    bool feasible() const { return status == Status::feasible; }
};

// Dense box-constrained LP: maximize cost^T v, A v = b, lo <= v <= hi.
// A is row-major with `rows` rows and cost.size() columns.
struct BoxLp {
    std::size_t rows = 0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> cost;
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t cols() const { return cost.size(); }
};

// Two-phase bounded-variable simplex with Bland's rule. Returns a vertex of
// the feasible box/affine intersection, or status infeasible. Throws
// SolverError on numerical breakdown.
FlightLpSolution solve_box(const BoxLp& problem);

FlightLpSolution solve(const FlightLpProblem& problem);

}  // namespace streambal::lp
