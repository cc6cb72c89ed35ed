#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpmf/dataset.hpp"
#include "dpmf/hyperparams.hpp"
#include "dpmf/objective.hpp"

namespace dpmf::test {

struct InstanceShape {
    std::size_t max_users = 10;
    std::size_t max_items = 10;
    std::size_t user_sources = 1;
    std::size_t item_sources = 1;
    std::size_t max_attributes = 6;
    std::size_t max_private = 2;
    double density = 0.4;
};

/// Random small problem: partial overlaps, source-only entities, ratings in [1, 5].
Problem random_problem(std::uint64_t seed, const InstanceShape& shape = {});

/// Random positive weights, distinct per source.
Hyperparams random_hyper(std::uint64_t seed, std::size_t k, const Problem& problem);

/// Every free variable drawn uniformly from [-1, 1]; shared source columns synced.
ModelState random_state(const Problem& problem, const Hyperparams& hyper, std::uint64_t seed);

/// Brute-force joint loss: per-cell scalar loops over string-keyed lookups.
/// Independent of the library kernels.
double oracle_loss(const Problem& problem, const ModelState& state, const Hyperparams& hyper);

/// Visits every scalar of the state (U, V, then each source's entities and
/// attributes) with a matching reference into the gradient.
void for_each_coordinate(ModelState& state, const ModelGradient& gradient,
                         const std::function<void(const std::string& where, double& x, double g)>& fn);

struct GradientCheck {
    std::size_t coordinates = 0;
    double worst_relative_error = 0.0;
    std::string worst_where;
};

/// Central differences of the brute-force loss, evaluated in long double so
/// the difference quotient is not swamped by cancellation, against the
/// analytic grad. Relative error uses max(|analytic|, |numeric|, floor) as
/// denominator.
GradientCheck check_gradient(const Problem& problem, const ModelState& state, const Hyperparams& hyper,
                             double step = 1e-6, double floor = 1e-4);

double max_abs_diff(const FactorMatrix& a, const FactorMatrix& b);
double max_abs_diff(const ModelState& a, const ModelState& b);

std::string temp_dir(const std::string& tag);

}  // namespace dpmf::test
