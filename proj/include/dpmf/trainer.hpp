#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpmf/objective.hpp"

namespace dpmf {

enum class Termination { Converged, MaxIters, Diverged };

std::string_view to_string(Termination reason);

struct IterationRecord {
    std::size_t iteration;
    /// Objective at the iterate the round's gradient was computed on.
    double loss;
    /// Largest |alpha * gradient| applied in this round.
    double max_update;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct TrainTrace {
    std::vector<IterationRecord> records;
    Termination reason = Termination::MaxIters;
};

/// Convergence bookkeeping shared by both execution modes.
///
/// A round stops the run when its loss is non-finite or its update is
/// non-finite (Diverged), or when the magnitude of the relative decrease
/// against the previous round's loss is below epsilon (Converged). The first
/// round has no previous loss; its relative decrease is taken as 1.
class ConvergenceGuard {
public:
    explicit ConvergenceGuard(double epsilon) : epsilon_(epsilon) {}

    /// Records the round and returns the termination reason if it ends the run.
    std::optional<Termination> observe(TrainTrace& trace, std::size_t iteration, double loss, double max_update);

    static double relative_decrease(double previous, double current);

private:
    double epsilon_;
    std::optional<double> previous_;
};

struct TrainResult {
    ModelState state;
    TrainTrace trace;
};

/// Full-batch gradient descent on the joint objective with a constant step.
/// Every factor matrix moves simultaneously from the same iterate.
TrainResult train_centralized(const Problem& problem, const Hyperparams& hyper);

/// Same, starting from a caller-supplied state.
TrainResult train_centralized(const Problem& problem, const Hyperparams& hyper, ModelState initial);

/// Lines `iter<TAB>loss<TAB>max_update`.
std::string format_trace(const TrainTrace& trace);

}  // namespace dpmf
