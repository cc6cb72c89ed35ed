#include "dpmf/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpmf/errors.hpp"

namespace dpmf {

namespace {

void require_labels(const FactorMatrix& m, const LabelIndex& expected, std::size_t k, const std::string& what) {
    if (m.k() != k) {
        throw DimensionMismatch(what + " has k=" + std::to_string(m.k()) + ", expected " + std::to_string(k));
    }
    if (m.n_cols() != expected.size()) {
        throw DimensionMismatch(what + " has " + std::to_string(m.n_cols()) + " columns, expected " +
                                std::to_string(expected.size()));
    }
}

std::string source_name(const AlignedSource& s) {
    return std::string(to_string(s.source.kind)) + " source " + std::to_string(s.source.index);
}

double max_abs_step(std::span<double> values, std::span<const double> grad, double alpha) {
    double max_update = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double step = alpha * grad[i];
        values[i] -= step;
        max_update = std::max(max_update, std::abs(step));
        if (std::isnan(step)) {
            max_update = step;
        }
    }
    return max_update;
}

double merge_max(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) {
        return std::nan("");
    }
    return std::max(a, b);
}

}  // namespace

FactorMatrix init_global_users(const SparseMatrix& ratings, const Hyperparams& hyper) {
    return init_factors(ratings.row_labels_ptr(), hyper, "U", Namespace::user());
}

FactorMatrix init_global_items(const SparseMatrix& ratings, const Hyperparams& hyper) {
    return init_factors(ratings.col_labels_ptr(), hyper, "V", Namespace::item());
}

SourceFactors init_source_factors(const SourceMatrix& source, const Hyperparams& hyper) {
    const std::string side = source.kind == SourceKind::User ? "U" : "V";
    const std::string idx = std::to_string(source.index);
    return SourceFactors{
        init_factors(source.data.row_labels_ptr(), hyper, side + "^" + idx, source.attribute_namespace()),
        init_factors(source.data.col_labels_ptr(), hyper, "Z^" + side + "^" + idx, source.attribute_namespace()),
    };
}

ModelState init_model_state(const Problem& problem, const Hyperparams& hyper) {
    ModelState state;
    state.users = init_global_users(problem.ratings().ratings, hyper);
    state.items = init_global_items(problem.ratings().ratings, hyper);
    for (const auto& s : problem.user_sources()) {
        state.user_sources.push_back(init_source_factors(s.source, hyper));
    }
    for (const auto& s : problem.item_sources()) {
        state.item_sources.push_back(init_source_factors(s.source, hyper));
    }
    sync_shared(problem, state);
    return state;
}

void check_shapes(const Problem& problem, const ModelState& state, std::size_t k) {
    require_labels(state.users, problem.users(), k, "U");
    require_labels(state.items, problem.items(), k, "V");
    if (state.user_sources.size() != problem.user_sources().size() ||
        state.item_sources.size() != problem.item_sources().size()) {
        throw DimensionMismatch("model state and problem disagree on the number of sources");
    }
    for (std::size_t n = 0; n < state.user_sources.size(); ++n) {
        const auto& s = problem.user_sources()[n];
        require_labels(state.user_sources[n].entities, s.source.data.row_labels(), k, source_name(s) + " entities");
        require_labels(state.user_sources[n].attributes, s.source.data.col_labels(), k,
                       source_name(s) + " attributes");
    }
    for (std::size_t m = 0; m < state.item_sources.size(); ++m) {
        const auto& s = problem.item_sources()[m];
        require_labels(state.item_sources[m].entities, s.source.data.row_labels(), k, source_name(s) + " entities");
        require_labels(state.item_sources[m].attributes, s.source.data.col_labels(), k,
                       source_name(s) + " attributes");
    }
}

void sync_shared(const Problem& problem, ModelState& state) {
    auto copy = [](FactorMatrix& local, const AlignmentReport& alignment, const FactorMatrix& global) {
        for (const SharedEntity& e : alignment.shared) {
            std::ranges::copy(global.col(e.global), local.col(e.local).begin());
        }
    };
    for (std::size_t n = 0; n < state.user_sources.size(); ++n) {
        copy(state.user_sources[n].entities, problem.user_sources()[n].alignment, state.users);
    }
    for (std::size_t m = 0; m < state.item_sources.size(); ++m) {
        copy(state.item_sources[m].entities, problem.item_sources()[m].alignment, state.items);
    }
}

FactorMatrix resolve_shared(const FactorMatrix& local, const AlignmentReport& alignment, const FactorMatrix& global) {
    FactorMatrix out = local;
    for (const SharedEntity& e : alignment.shared) {
        std::ranges::copy(global.col(e.global), out.col(e.local).begin());
    }
    return out;
}

RatingTerms rating_terms(const SparseMatrix& ratings, const FactorMatrix& users, const FactorMatrix& items,
                         const Hyperparams& hyper) {
    if (users.n_cols() != ratings.n_rows() || items.n_cols() != ratings.n_cols() || users.k() != items.k()) {
        throw DimensionMismatch("factor shapes do not match the rating matrix");
    }
    const std::size_t k = users.k();
    RatingTerms out;
    out.grad_users = FactorMatrix(k, users.labels_ptr());
    out.grad_items = FactorMatrix(k, items.labels_ptr());

    double sum_sq = 0.0;
    for (const Entry& e : ratings.entries()) {
        auto u = users.col(e.row);
        auto v = items.col(e.col);
        const double residual = dot(u, v) - e.value;
        sum_sq += residual * residual;
        auto gu = out.grad_users.col(e.row);
        auto gv = out.grad_items.col(e.col);
        for (std::size_t d = 0; d < k; ++d) {
            gu[d] += residual * v[d];
            gv[d] += residual * u[d];
        }
    }
    out.data_loss = 0.5 * sum_sq;

    auto gu = out.grad_users.values();
    auto u = users.values();
    for (std::size_t i = 0; i < gu.size(); ++i) {
        gu[i] += hyper.lambda_U * u[i];
    }
    auto gv = out.grad_items.values();
    auto v = items.values();
    for (std::size_t i = 0; i < gv.size(); ++i) {
        gv[i] += hyper.lambda_V * v[i];
    }
    out.regularization = 0.5 * hyper.lambda_U * users.squared_norm() + 0.5 * hyper.lambda_V * items.squared_norm();
    return out;
}

SourceTerms source_terms(const SparseMatrix& data, const AlignmentReport& alignment, const FactorMatrix& entities,
                         const FactorMatrix& attributes, double lambda_entity, const SourceWeights& weights) {
    if (entities.n_cols() != data.n_rows() || attributes.n_cols() != data.n_cols() ||
        entities.k() != attributes.k() || alignment.is_shared.size() != data.n_rows()) {
        throw DimensionMismatch("factor shapes do not match the source matrix");
    }
    const std::size_t k = entities.k();
    const double lambda_s = weights.lambda_data;

    // raw residual sums first, weights applied afterwards
    FactorMatrix residual_entities(k, entities.labels_ptr());
    FactorMatrix residual_attributes(k, attributes.labels_ptr());
    double sum_sq = 0.0;
    for (const Entry& e : data.entries()) {
        auto l = entities.col(e.row);
        auto z = attributes.col(e.col);
        const double residual = dot(l, z) - e.value;
        sum_sq += residual * residual;
        auto gl = residual_entities.col(e.row);
        auto gz = residual_attributes.col(e.col);
        for (std::size_t d = 0; d < k; ++d) {
            gl[d] += residual * z[d];
            gz[d] += residual * l[d];
        }
    }

    SourceTerms out;
    out.data_loss = 0.5 * lambda_s * sum_sq;

    std::vector<EntityId> shared_ids;
    shared_ids.reserve(alignment.shared.size());
    for (const SharedEntity& e : alignment.shared) {
        shared_ids.push_back(entities.labels()[e.local]);
    }
    out.partial = FactorMatrix(k, std::make_shared<LabelIndex>(std::move(shared_ids)));
    for (std::size_t c = 0; c < alignment.shared.size(); ++c) {
        auto src = residual_entities.col(alignment.shared[c].local);
        auto dst = out.partial.col(c);
        for (std::size_t d = 0; d < k; ++d) {
            dst[d] = lambda_s * src[d];
        }
    }

    out.grad_entities = FactorMatrix(k, entities.labels_ptr());
    double private_norm = 0.0;
    for (std::size_t p = 0; p < entities.n_cols(); ++p) {
        if (alignment.is_shared[p]) {
            continue;
        }
        auto l = entities.col(p);
        auto src = residual_entities.col(p);
        auto dst = out.grad_entities.col(p);
        for (std::size_t d = 0; d < k; ++d) {
            dst[d] = lambda_s * src[d] + lambda_entity * l[d];
            private_norm += l[d] * l[d];
        }
    }

    out.grad_attributes = FactorMatrix(k, attributes.labels_ptr());
    auto gz = out.grad_attributes.values();
    auto rz = residual_attributes.values();
    auto z = attributes.values();
    for (std::size_t i = 0; i < gz.size(); ++i) {
        gz[i] = lambda_s * rz[i] + weights.lambda_latent * z[i];
    }

    out.regularization = 0.5 * lambda_entity * private_norm + 0.5 * weights.lambda_latent * attributes.squared_norm();
    return out;
}

void oplus_into(FactorMatrix& a, const FactorMatrix& b) {
    if (b.n_cols() == 0) {
        return;
    }
    if (a.k() != b.k()) {
        throw RowCountMismatch("cannot merge a " + std::to_string(b.k()) + "-row matrix into a " +
                               std::to_string(a.k()) + "-row matrix");
    }
    for (std::size_t c = 0; c < b.n_cols(); ++c) {
        auto target = a.labels().find(b.labels()[c]);
        if (!target) {
            continue;
        }
        auto dst = a.col(*target);
        auto src = b.col(c);
        for (std::size_t d = 0; d < a.k(); ++d) {
            dst[d] += src[d];
        }
    }
}

FactorMatrix oplus(const FactorMatrix& a, const FactorMatrix& b) {
    FactorMatrix out = a;
    oplus_into(out, b);
    return out;
}

Evaluation evaluate(const Problem& problem, const ModelState& state, const Hyperparams& hyper) {
    check_shapes(problem, state, hyper.k);

    Evaluation out;
    RatingTerms rating = rating_terms(problem.ratings().ratings, state.users, state.items, hyper);
    out.loss.rating_term = rating.data_loss;
    out.loss.regularization = rating.regularization;
    out.loss.total = rating.local_loss();
    out.gradient.users = std::move(rating.grad_users);
    out.gradient.items = std::move(rating.grad_items);

    auto run_sources = [&](std::span<const AlignedSource> sources, const std::vector<SourceFactors>& factors,
                           const FactorMatrix& global, double lambda_entity, bool user_side,
                           std::vector<double>& terms, FactorMatrix& global_grad,
                           std::vector<SourceFactors>& grads) {
        for (std::size_t n = 0; n < sources.size(); ++n) {
            const auto& s = sources[n];
            const SourceWeights w =
                user_side ? hyper.user_source(s.source.index) : hyper.item_source(s.source.index);
            FactorMatrix resolved = resolve_shared(factors[n].entities, s.alignment, global);
            SourceTerms t =
                source_terms(s.source.data, s.alignment, resolved, factors[n].attributes, lambda_entity, w);
            terms.push_back(t.data_loss);
            out.loss.regularization += t.regularization;
            out.loss.total += t.local_loss();
            oplus_into(global_grad, t.partial);
            grads.push_back(SourceFactors{std::move(t.grad_entities), std::move(t.grad_attributes)});
        }
    };
    // canonical order: rating term, then user sources, then item sources, each by ascending index
    run_sources(problem.user_sources(), state.user_sources, state.users, hyper.lambda_U, true,
                out.loss.user_source_terms, out.gradient.users, out.gradient.user_sources);
    run_sources(problem.item_sources(), state.item_sources, state.items, hyper.lambda_V, false,
                out.loss.item_source_terms, out.gradient.items, out.gradient.item_sources);
    return out;
}

LossBreakdown loss(const Problem& problem, const ModelState& state, const Hyperparams& hyper) {
    return evaluate(problem, state, hyper).loss;
}

ModelGradient grad(const Problem& problem, const ModelState& state, const Hyperparams& hyper) {
    return evaluate(problem, state, hyper).gradient;
}

double apply_step(ModelState& state, const ModelGradient& gradient, double alpha) {
    double max_update = max_abs_step(state.users.values(), gradient.users.values(), alpha);
    max_update = merge_max(max_update, max_abs_step(state.items.values(), gradient.items.values(), alpha));
    for (std::size_t n = 0; n < state.user_sources.size(); ++n) {
        auto& f = state.user_sources[n];
        const auto& g = gradient.user_sources[n];
        max_update = merge_max(max_update, max_abs_step(f.entities.values(), g.entities.values(), alpha));
        max_update = merge_max(max_update, max_abs_step(f.attributes.values(), g.attributes.values(), alpha));
    }
    for (std::size_t m = 0; m < state.item_sources.size(); ++m) {
        auto& f = state.item_sources[m];
        const auto& g = gradient.item_sources[m];
        max_update = merge_max(max_update, max_abs_step(f.entities.values(), g.entities.values(), alpha));
        max_update = merge_max(max_update, max_abs_step(f.attributes.values(), g.attributes.values(), alpha));
    }
    return max_update;
}

double predict_at(const ModelState& state, std::size_t user, std::size_t item, double scale_lo, double scale_hi) {
    return std::clamp(dot(state.users.col(user), state.items.col(item)), scale_lo, scale_hi);
}

double predict(const ModelState& state, const EntityId& user, const EntityId& item, double scale_lo,
               double scale_hi) {
    auto u = state.users.labels().find(user);
    if (!u) {
        throw UnknownEntity("unknown user " + to_string(user));
    }
    auto v = state.items.labels().find(item);
    if (!v) {
        throw UnknownEntity("unknown item " + to_string(item));
    }
    return predict_at(state, *u, *v, scale_lo, scale_hi);
}

}  // namespace dpmf
