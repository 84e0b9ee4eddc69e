#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "netobs/model.hpp"
#include "netobs/rng.hpp"

namespace netobs::testing {

// Central finite differences of the field, per-coordinate step
// 1e-6 * (1 + |x_i|).
inline Matrix fd_field_jacobian(const ContinuousModel& model, const StateVector& x) {
    Matrix J(model.n, model.n);
    for (int i = 0; i < model.n; ++i) {
        const double delta = 1e-6 * (1.0 + std::abs(x[i]));
        StateVector xp = x;
        StateVector xm = x;
        xp[i] += delta;
        xm[i] -= delta;
        J.col(i) = (model.field(xp) - model.field(xm)) / (2.0 * delta);
    }
    return J;
}

// Frobenius-relative error against the larger of the two norms.
inline double matrix_rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / scale;
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

// Random state strictly inside the model's bounds.
inline StateVector random_interior_state(const ContinuousModel& model, SplitRng& rng) {
    StateVector x(model.n);
    for (int i = 0; i < model.n; ++i) {
        const double lo = model.lower_bounds[i];
        const double hi = model.upper_bounds[i];
        if (std::isfinite(lo) && std::isfinite(hi)) {
            x[i] = lo + (hi - lo) * rng.uniform(0.1, 0.9);
        } else if (std::isfinite(lo)) {
            x[i] = lo + rng.uniform(0.5, 1.5);
        } else if (std::isfinite(hi)) {
            x[i] = hi - rng.uniform(0.5, 1.5);
        } else {
            x[i] = rng.uniform(-1.0, 1.0);
        }
    }
    return x;
}

}  // namespace netobs::testing
