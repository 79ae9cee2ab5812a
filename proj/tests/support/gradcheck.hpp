#pragma once

// Finite-difference oracle for gradient checks. Runs in double: central
// differences with step 1e-4 resolve gradients to ~1e-9 absolute, far below
// the 1e-4 relative gate. Kept independent of the tape: the oracle re-runs
// the tape-free forward path only.

#include <algorithm>
#include <cmath>
#include <string>

#include "abbie/rng.hpp"
#include "abbie/tensor.hpp"

namespace abbie::testsupport {

inline double rel_err(double a, double b, double floor = 1e-4) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Max relative error between the analytic gradient of one tensor and central
// differences of eval_loss() under perturbation of that tensor's entries.
template <class F>
double fd_check_tensor(TensorT<double>& t, const TensorT<double>& analytic, F&& eval_loss,
                       double step = 1e-4) {
    double worst = 0.0;
    for (int64_t i = 0; i < t.size(); ++i) {
        const double orig = t.data()[i];
        t.data()[i] = orig + step;
        const double up = eval_loss();
        t.data()[i] = orig - step;
        const double dn = eval_loss();
        t.data()[i] = orig;
        const double fd = (up - dn) / (2.0 * step);
        worst = std::max(worst, rel_err(analytic.data()[i], fd));
    }
    return worst;
}

template <class S>
TensorT<S> random_tensor(Shape shape, uint64_t seed, double spread = 1.0) {
    TensorT<S> t(std::move(shape));
    Prng rng(seed);
    for (auto& v : t.values()) v = static_cast<S>(rng.gauss() * spread);
    return t;
}

}  // namespace abbie::testsupport
