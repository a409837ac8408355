#include "lmsfd/grad_check.hpp"

#include <cmath>
#include <sstream>

#include "lmsfd/errors.hpp"

namespace lmsfd {

namespace {

double eval_loss(const GradCheckProblem& problem) {
    Tape tape;
    auto [loss, bound] = problem.build(tape);
    (void)bound;
    const double v = loss->value(0, 0);
    if (!std::isfinite(v)) {
        throw NumericError("grad_check: loss is not finite");
    }
    return v;
}

}  // namespace

double grad_check(const GradCheckProblem& problem, double eps) {
    if (eps <= 0.0 || eps > 1e-2) {
        std::ostringstream os;
        os << "grad_check: eps " << eps << " outside (0, 1e-2]";
        throw ConfigError(os.str());
    }

    // Analytic pass.
    std::vector<Matrix> analytic;
    {
        Tape tape;
        auto [loss, bound] = problem.build(tape);
        if (bound.size() != problem.params.size()) {
            throw ConfigError("grad_check: builder bound a different number of parameters");
        }
        if (!std::isfinite(loss->value(0, 0))) {
            throw NumericError("grad_check: loss is not finite");
        }
        tape.backward(loss);
        analytic.reserve(bound.size());
        for (Var v : bound) analytic.push_back(v->grad);
    }

    double max_rel = 0.0;
    for (std::size_t p = 0; p < problem.params.size(); ++p) {
        Matrix& m = *problem.params[p];
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double original = m.data()[i];
            m.data()[i] = original + eps;
            const double plus = eval_loss(problem);
            m.data()[i] = original - eps;
            const double minus = eval_loss(problem);
            m.data()[i] = original;

            const double numeric = (plus - minus) / (2.0 * eps);
            const double a = analytic[p].data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace lmsfd
