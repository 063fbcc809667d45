#include "streambal/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "streambal/errors.hpp"

namespace streambal::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;
constexpr double kReducedCostTol = 1e-10;
constexpr double kRatioTieTol = 1e-12;

// Bounded-variable simplex over  min c^T x,  T x = beta,  0 <= x <= ub.
// The first `structural` columns are the shifted problem variables, the
// remaining ones are one artificial per row (initially basic).
class BoundedSimplex {
public:
    BoundedSimplex(std::size_t rows, std::size_t structural, std::vector<double> tableau,
                   std::vector<double> rhs, std::vector<double> ub)
        : m_(rows),
          n_(structural + rows),
          t_(std::move(tableau)),
          ub_(std::move(ub)),
          basis_(rows),
          xb_(std::move(rhs)),
          at_upper_(n_, false) {
        for (std::size_t i = 0; i < m_; ++i) basis_[i] = structural + i;
        is_basic_.assign(n_, false);
        for (auto j : basis_) is_basic_[j] = true;
        max_iterations_ = 100 * (n_ + m_) + 1000;
    }

    void run(const std::vector<double>& cost) {
        for (std::size_t iter = 0;; ++iter) {
            if (iter > max_iterations_) throw SolverError("simplex iteration limit exceeded");
            const auto entering = choose_entering(cost);
            if (entering == npos) return;
            move(entering);
        }
    }

    void fix_upper(std::size_t j, double value) { ub_[j] = value; }

    // Current value of variable j (basic values from the running update).
    double value(std::size_t j) const {
        if (is_basic_[j]) {
            for (std::size_t i = 0; i < m_; ++i)
                if (basis_[i] == j) return xb_[i];
        }
        return at_upper_[j] ? ub_[j] : 0.0;
    }

    bool basic(std::size_t j) const { return is_basic_[j]; }
    bool at_upper(std::size_t j) const { return at_upper_[j]; }
    std::size_t basis_of_row(std::size_t i) const { return basis_[i]; }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    double& at(std::size_t i, std::size_t j) { return t_[i * n_ + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * n_ + j]; }

    std::size_t choose_entering(const std::vector<double>& cost) const {
        for (std::size_t j = 0; j < n_; ++j) {
            if (is_basic_[j] || ub_[j] <= 0.0) continue;
            double d = cost[j];
            for (std::size_t i = 0; i < m_; ++i) d -= cost[basis_[i]] * at(i, j);
            if (!at_upper_[j] && d < -kReducedCostTol) return j;
            if (at_upper_[j] && d > kReducedCostTol) return j;
        }
        return npos;
    }

    void move(std::size_t j) {
        const double dir = at_upper_[j] ? -1.0 : 1.0;
        std::size_t leave_row = npos;
        double best = kInf;
        bool leave_to_upper = false;

        // Ratio test; ties go to the lowest-indexed basic variable (Bland).
        for (std::size_t i = 0; i < m_; ++i) {
            const double alpha = at(i, j);
            if (std::abs(alpha) <= kPivotTol) continue;
            const double delta = -dir * alpha;
            const std::size_t var = basis_[i];
            double limit = kInf;
            bool to_upper = false;
            if (delta < 0.0) {
                limit = std::max(0.0, xb_[i]) / -delta;
            } else if (std::isfinite(ub_[var])) {
                limit = std::max(0.0, ub_[var] - xb_[i]) / delta;
                to_upper = true;
            }
            if (!std::isfinite(limit)) continue;
            if (leave_row == npos || limit < best - kRatioTieTol ||
                (limit <= best + kRatioTieTol && var < basis_[leave_row])) {
                best = limit;
                leave_row = i;
                leave_to_upper = to_upper;
            }
        }

        double step = 0.0;
        if (leave_row != npos && !(ub_[j] <= best)) {
            step = best;
        } else if (std::isfinite(ub_[j])) {
            step = ub_[j];
            leave_row = npos;
        } else {
            throw SolverError("unbounded direction in bounded simplex");
        }

        for (std::size_t i = 0; i < m_; ++i) xb_[i] -= dir * step * at(i, j);
        if (!std::all_of(xb_.begin(), xb_.end(), [](double x) { return std::isfinite(x); }))
            throw SolverError("non-finite basic solution");

        if (leave_row == npos) {
            at_upper_[j] = !at_upper_[j];
            return;
        }

        const double entering_value = at_upper_[j] ? ub_[j] - step : step;
        const std::size_t leaving = basis_[leave_row];
        is_basic_[leaving] = false;
        at_upper_[leaving] = leave_to_upper;
        is_basic_[j] = true;
        at_upper_[j] = false;
        basis_[leave_row] = j;
        xb_[leave_row] = entering_value;
        pivot(leave_row, j);
    }

    void pivot(std::size_t r, std::size_t j) {
        const double p = at(r, j);
        if (std::abs(p) <= kPivotTol) throw SolverError("vanishing pivot element");
        for (std::size_t c = 0; c < n_; ++c) at(r, c) /= p;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = at(i, j);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n_; ++c) at(i, c) -= f * at(r, c);
        }
    }

    std::size_t m_;
    std::size_t n_;
    std::vector<double> t_;
    std::vector<double> ub_;
    std::vector<std::size_t> basis_;
    std::vector<double> xb_;
    std::vector<bool> at_upper_;
    std::vector<bool> is_basic_;
    std::size_t max_iterations_;
};

// Solves the m x m system M x = r in place with partial pivoting.
std::vector<double> solve_dense(std::vector<double> mat, std::vector<double> rhs, std::size_t m) {
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t best = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(mat[r * m + col]) > std::abs(mat[best * m + col])) best = r;
        if (std::abs(mat[best * m + col]) < 1e-14) throw SolverError("singular basis");
        if (best != col) {
            for (std::size_t c = 0; c < m; ++c) std::swap(mat[col * m + c], mat[best * m + c]);
            std::swap(rhs[col], rhs[best]);
        }
        for (std::size_t r = col + 1; r < m; ++r) {
            const double f = mat[r * m + col] / mat[col * m + col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < m; ++c) mat[r * m + c] -= f * mat[col * m + c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(m);
    for (std::size_t i = m; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t c = i + 1; c < m; ++c) s -= mat[i * m + c] * x[c];
        x[i] = s / mat[i * m + i];
    }
    return x;
}

}  // namespace

Bounds bounds_for(double pivot_pi, double pi_k) {
    if (!(pivot_pi > 0.0 && pivot_pi < 1.0))
        throw DomainError("pivot probability must lie strictly inside (0, 1), got " +
                          std::to_string(pivot_pi));
    if (!(pi_k > 0.0 && pi_k < 1.0))
        throw DomainError("candidate probability must lie strictly inside (0, 1), got " +
                          std::to_string(pi_k));
    const double ratio = pivot_pi / (1.0 - pivot_pi);
    return {std::max(-pi_k, (pi_k - 1.0) * ratio), std::min(1.0 - pi_k, pi_k * ratio)};
}

FlightLpSolution solve_box(const BoxLp& problem) {
    const std::size_t m = problem.rows;
    const std::size_t n = problem.cols();
    if (problem.a.size() != m * n || problem.b.size() != m || problem.lo.size() != n ||
        problem.hi.size() != n)
        throw DimensionError("inconsistent linear program dimensions");
    for (std::size_t k = 0; k < n; ++k)
        if (!(problem.lo[k] <= problem.hi[k]))
            throw DomainError("variable bounds out of order");

    // Shift v = lo + u, 0 <= u <= hi - lo, and flip rows so the start is x_B = rhs >= 0.
    const std::size_t width = n + m;
    std::vector<double> tableau(m * width, 0.0);
    std::vector<double> rhs(m);
    std::vector<double> sign(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        double r = problem.b[i];
        for (std::size_t k = 0; k < n; ++k) r -= problem.a[i * n + k] * problem.lo[k];
        if (r < 0.0) sign[i] = -1.0;
        rhs[i] = sign[i] * r;
        for (std::size_t k = 0; k < n; ++k) tableau[i * width + k] = sign[i] * problem.a[i * n + k];
        tableau[i * width + n + i] = 1.0;
    }
    std::vector<double> ub(width, kInf);
    for (std::size_t k = 0; k < n; ++k) ub[k] = problem.hi[k] - problem.lo[k];

    BoundedSimplex simplex(m, n, std::move(tableau), rhs, std::move(ub));

    std::vector<double> phase1(width, 0.0);
    for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1.0;
    simplex.run(phase1);

    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m; ++i) infeasibility += simplex.value(n + i);
    FlightLpSolution solution;
    if (infeasibility > kFeasibilityTol) return solution;

    std::vector<double> phase2(width, 0.0);
    for (std::size_t k = 0; k < n; ++k) phase2[k] = -problem.cost[k];
    for (std::size_t i = 0; i < m; ++i) simplex.fix_upper(n + i, 0.0);
    simplex.run(phase2);

    // Recover the basic values from the original columns rather than the
    // running tableau update, with artificials pinned to zero.
    std::vector<double> u(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        if (!simplex.basic(k) && simplex.at_upper(k)) u[k] = problem.hi[k] - problem.lo[k];
    if (m > 0) {
        std::vector<double> basis_mat(m * m, 0.0);
        std::vector<double> r(m);
        for (std::size_t i = 0; i < m; ++i) {
            r[i] = sign[i] * problem.b[i];
            for (std::size_t k = 0; k < n; ++k) {
                r[i] -= sign[i] * problem.a[i * n + k] * problem.lo[k];
                if (!simplex.basic(k)) r[i] -= sign[i] * problem.a[i * n + k] * u[k];
            }
        }
        for (std::size_t c = 0; c < m; ++c) {
            const std::size_t var = simplex.basis_of_row(c);
            for (std::size_t i = 0; i < m; ++i)
                basis_mat[i * m + c] =
                    var < n ? sign[i] * problem.a[i * n + var] : (var - n == i ? 1.0 : 0.0);
        }
        const auto xb = solve_dense(std::move(basis_mat), std::move(r), m);
        for (std::size_t c = 0; c < m; ++c) {
            const std::size_t var = simplex.basis_of_row(c);
            if (var < n) u[var] = xb[c];
        }
    }

    solution.v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double v = problem.lo[k] + u[k];
        if (!std::isfinite(v)) throw SolverError("non-finite solution component");
        if (v < problem.lo[k] - kFeasibilityTol || v > problem.hi[k] + kFeasibilityTol)
            throw SolverError("basic solution violates its bounds beyond tolerance");
        solution.v[k] = std::clamp(v, problem.lo[k], problem.hi[k]);
    }
    for (std::size_t i = 0; i < m; ++i) {
        double lhs = 0.0;
        for (std::size_t k = 0; k < n; ++k) lhs += problem.a[i * n + k] * solution.v[k];
        if (std::abs(lhs - problem.b[i]) > kFeasibilityTol)
            throw SolverError("equality residual above tolerance after phase 2");
    }
    for (std::size_t k = 0; k < n; ++k) solution.objective += problem.cost[k] * solution.v[k];
    solution.status = Status::feasible;
    return solution;
}

FlightLpSolution solve(const FlightLpProblem& problem) {
    if (problem.candidates.empty()) throw DomainError("flight LP needs at least one candidate");
    const std::size_t p = problem.target.size();
    const std::size_t n = problem.candidates.size();

    BoxLp box;
    box.rows = p;
    box.a.assign(p * n, 0.0);
    box.b = problem.target;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& c = problem.candidates[k];
        if (c.aux_over_pi.size() != p)
            throw DimensionError("candidate auxiliary length differs from target length");
        const auto bounds = bounds_for(problem.pivot_pi, c.pi);
        for (std::size_t i = 0; i < p; ++i) box.a[i * n + k] = c.aux_over_pi[i];
        box.cost.push_back(c.cost);
        box.lo.push_back(bounds.lo);
        box.hi.push_back(bounds.hi);
    }
    return solve_box(box);
}

}  // namespace streambal::lp
