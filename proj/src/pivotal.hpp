#pragma once

#include <utility>

namespace streambal::detail {

// One pivotal exchange between two fractional probabilities. At least one
// of the returned values is 0 or 1, the sum is preserved, and each value is
// preserved in expectation over u ~ U(0, 1).
inline std::pair<double, double> pivotal_pair(double a, double b, double u, double tolerance) {
    const double s = a + b;
    std::pair<double, double> out;
    if (s <= 1.0) {
        out = u < b / s ? std::pair{0.0, s} : std::pair{s, 0.0};
    } else {
        out = u < (1.0 - b) / (2.0 - s) ? std::pair{1.0, s - 1.0} : std::pair{s - 1.0, 1.0};
    }
    auto snap = [tolerance](double x) {
        if (x <= tolerance) return 0.0;
        if (x >= 1.0 - tolerance) return 1.0;
        return x;
    };
    return {snap(out.first), snap(out.second)};
}

}  // namespace streambal::detail
