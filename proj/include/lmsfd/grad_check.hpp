#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lmsfd/graph.hpp"

namespace lmsfd {

// Central-difference check of reverse-mode gradients.
//
// `build` constructs the loss on a fresh tape from the current contents of
// `params`, returning the 1x1 loss node plus one bound node per checked
// parameter (same order as `params`). The builder must be deterministic: it
// is re-run with individual parameter entries perturbed by +/- eps.
struct GradCheckProblem {
    std::vector<Matrix*> params;
    std::function<std::pair<Var, std::vector<Var>>(Tape&)> build;
};

// Returns max over all parameter entries of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Throws NumericError if any evaluated loss is non-finite.
double grad_check(const GradCheckProblem& problem, double eps = 1e-5);

}  // namespace lmsfd
