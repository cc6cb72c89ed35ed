#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpmf/dataset.hpp"
#include "dpmf/factor_matrix.hpp"
#include "dpmf/hyperparams.hpp"

namespace dpmf {

/// Latent factors of one source: its entity factors (U^n or V^m, one column
/// per source row) and its attribute factors (Z).
struct SourceFactors {
    FactorMatrix entities;
    FactorMatrix attributes;

    friend bool operator==(const SourceFactors&, const SourceFactors&) = default;
};

/// All trainable factors. Shared entity columns of a source are the same
/// variables as the corresponding global columns: the objective always reads
/// them from `users` / `items`, and `sync_shared` copies them over so the
/// stored source matrices are complete for output.
struct ModelState {
    FactorMatrix users;
    FactorMatrix items;
    std::vector<SourceFactors> user_sources;
    std::vector<SourceFactors> item_sources;

    friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Gradient of the objective, same shapes as ModelState. Shared columns of
/// the source entity gradients are zero; their contribution lives in the
/// global gradient via the merge operator.
using ModelGradient = ModelState;

struct LossBreakdown {
    /// 1/2 sum over observed ratings of squared residuals.
    double rating_term = 0.0;
    /// lambda_S/2 sum over observed cells, one per source.
    std::vector<double> user_source_terms;
    std::vector<double> item_source_terms;
    double regularization = 0.0;
    double total = 0.0;
};

/// Initial factors, seeded per role; shared source columns synced from U / V.
ModelState init_model_state(const Problem& problem, const Hyperparams& hyper);

/// Per-role initializers; both execution modes go through these.
FactorMatrix init_global_users(const SparseMatrix& ratings, const Hyperparams& hyper);
FactorMatrix init_global_items(const SparseMatrix& ratings, const Hyperparams& hyper);
SourceFactors init_source_factors(const SourceMatrix& source, const Hyperparams& hyper);

/// Throws DimensionMismatch if `state` does not fit `problem` and `hyper.k`.
void check_shapes(const Problem& problem, const ModelState& state, std::size_t k);

/// Copies global columns into the shared columns of every source.
void sync_shared(const Problem& problem, ModelState& state);

/// Copy of `local` with its shared columns taken from `global`.
FactorMatrix resolve_shared(const FactorMatrix& local, const AlignmentReport& alignment, const FactorMatrix& global);

// ---------------------------------------------------------------------------
// Per-cluster terms. The centralized trainer and the distributed nodes call
// the same kernels, which is what makes the two routes agree bitwise.

/// Terms owned by the rating matrix holder.
struct RatingTerms {
    double data_loss = 0.0;        // 1/2 sum (r - U_i.V_j)^2
    double regularization = 0.0;   // lambda_U/2 |U|^2 + lambda_V/2 |V|^2
    FactorMatrix grad_users;       // sum (U_i.V_j - r) V_j + lambda_U U_i
    FactorMatrix grad_items;       // sum (U_i.V_j - r) U_i + lambda_V V_j

    double local_loss() const { return data_loss + regularization; }
};

RatingTerms rating_terms(const SparseMatrix& ratings, const FactorMatrix& users, const FactorMatrix& items,
                         const Hyperparams& hyper);

/// Terms owned by one source holder. `entities` must already carry the
/// current global vectors in its shared columns.
struct SourceTerms {
    double data_loss = 0.0;        // lambda_S/2 sum (s - L_p.Z_k)^2
    double regularization = 0.0;  // lambda_entity/2 |private L|^2 + lambda_Z/2 |Z|^2
    /// Partial gradient for the shared entities, labeled with their ids and
    /// ordered as alignment.shared: lambda_S sum (L_p.Z_k - s) Z_k.
    FactorMatrix partial;
    /// Gradient of the private entity columns; shared columns are zero.
    FactorMatrix grad_entities;
    FactorMatrix grad_attributes;

    double local_loss() const { return data_loss + regularization; }
};

SourceTerms source_terms(const SparseMatrix& data, const AlignmentReport& alignment, const FactorMatrix& entities,
                         const FactorMatrix& attributes, double lambda_entity, const SourceWeights& weights);

// ---------------------------------------------------------------------------

/// Label-aware addition: columns of `b` are added to the column of `a` with
/// the same EntityId; unmatched columns of `b` are ignored.
/// Throws RowCountMismatch when the latent dimensions differ.
FactorMatrix oplus(const FactorMatrix& a, const FactorMatrix& b);
void oplus_into(FactorMatrix& a, const FactorMatrix& b);

LossBreakdown loss(const Problem& problem, const ModelState& state, const Hyperparams& hyper);

ModelGradient grad(const Problem& problem, const ModelState& state, const Hyperparams& hyper);

struct Evaluation {
    LossBreakdown loss;
    ModelGradient gradient;
};

/// Loss and gradient from one pass over the data.
Evaluation evaluate(const Problem& problem, const ModelState& state, const Hyperparams& hyper);

/// X <- X - alpha * grad for every factor matrix; returns max |alpha * grad|.
double apply_step(ModelState& state, const ModelGradient& gradient, double alpha);

/// Predicted rating clamp(U_i.V_j, lo, hi). Throws UnknownEntity.
double predict(const ModelState& state, const EntityId& user, const EntityId& item, double scale_lo,
               double scale_hi);

double predict_at(const ModelState& state, std::size_t user, std::size_t item, double scale_lo, double scale_hi);

}  // namespace dpmf
