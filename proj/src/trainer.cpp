#include "dpmf/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "dpmf/format.hpp"

namespace dpmf {

std::string_view to_string(Termination reason) {
    switch (reason) {
        case Termination::Converged: return "converged";
        case Termination::MaxIters: return "max-iters";
        case Termination::Diverged: return "diverged";
    }
    return "unknown";
}

double ConvergenceGuard::relative_decrease(double previous, double current) {
    return (previous - current) / std::max(previous, 1e-12);
}

std::optional<Termination> ConvergenceGuard::observe(TrainTrace& trace, std::size_t iteration, double loss,
                                                     double max_update) {
    trace.records.push_back(IterationRecord{iteration, loss, max_update});
    if (!std::isfinite(loss) || !std::isfinite(max_update)) {
        return Termination::Diverged;
    }
    const double decrease = previous_ ? relative_decrease(*previous_, loss) : 1.0;
    previous_ = loss;
    // a large increase is not convergence; it is left to run into divergence
    if (std::abs(decrease) < epsilon_) {
        return Termination::Converged;
    }
    return std::nullopt;
}

TrainResult train_centralized(const Problem& problem, const Hyperparams& hyper) {
    hyper.validate();
    return train_centralized(problem, hyper, init_model_state(problem, hyper));
}

TrainResult train_centralized(const Problem& problem, const Hyperparams& hyper, ModelState initial) {
    hyper.validate();
    check_shapes(problem, initial, hyper.k);

    TrainResult result{std::move(initial), {}};
    ConvergenceGuard guard(hyper.epsilon);
    for (std::size_t iter = 1; iter <= hyper.max_iters; ++iter) {
        Evaluation eval = evaluate(problem, result.state, hyper);
        if (!std::isfinite(eval.loss.total)) {
            result.trace.reason = *guard.observe(result.trace, iter, eval.loss.total, 0.0);
            break;
        }
        const double max_update = apply_step(result.state, eval.gradient, hyper.alpha);
        if (auto reason = guard.observe(result.trace, iter, eval.loss.total, max_update)) {
            result.trace.reason = *reason;
            break;
        }
    }
    sync_shared(problem, result.state);
    return result;
}

std::string format_trace(const TrainTrace& trace) {
    std::string out;
    for (const auto& r : trace.records) {
        out += std::to_string(r.iteration);
        out += '\t';
        out += format_double(r.loss);
        out += '\t';
        out += format_double(r.max_update);
        out += '\n';
    }
    return out;
}

}  // namespace dpmf
