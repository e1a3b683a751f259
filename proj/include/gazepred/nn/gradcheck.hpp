#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/nn/core.hpp"

namespace gazepred {
namespace nn {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
};

// Central-difference check at 64-bit precision. The caller runs one analytic
// forward/backward beforehand so each parameter's grad buffer holds dLoss/dp;
// `loss` must be a pure forward pass returning the scalar loss at the current
// parameter values.
template <typename LossFn>
GradCheckResult check_gradients(const std::vector<Parameter<double>*>& params, LossFn&& loss,
                                double step = 1e-5) {
    GradCheckResult res;
    for (Parameter<double>* p : params) {
        if (!p->value.has_grad())
            throw NumericError("gradient check: no gradient recorded for " + p->name);
        for (std::int64_t k = 0; k < p->value.numel(); ++k) {
            const double orig = p->value[k];
            p->value[k] = orig + step;
            const double up = loss();
            p->value[k] = orig - step;
            const double down = loss();
            p->value[k] = orig;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = p->value.grad()[k];
            if (!std::isfinite(numeric) || !std::isfinite(analytic))
                throw NumericError("gradient check: non-finite gradient for " + p->name);
            // the difference of two O(1) losses carries ~1e-16 of rounding,
            // so `numeric` is only trustworthy to ~1e-11 absolute; the
            // denominator floor keeps that noise below the 1e-4 tolerance
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = p->name;
            }
        }
    }
    return res;
}

} // namespace nn
} // namespace gazepred
