#pragma once

// Upper tail of the chi-square distribution via the regularized incomplete
// gamma function (series below a + 1, continued fraction above).

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(log_prefix);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(log_prefix) * h;
}

inline double chi_square_sf(double stat, double dof) { return gamma_q(0.5 * dof, 0.5 * stat); }

// Pearson statistic against equal expected counts.
inline double uniform_chi_square(const std::vector<std::size_t>& counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) stat += (c - expected) * (c - expected) / expected;
    return stat;
}

}  // namespace oracle
