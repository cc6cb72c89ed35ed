#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "dpmf/errors.hpp"
#include "dpmf/rng.hpp"

namespace dpmf::test {

namespace {

LabelsPtr labels_of(Namespace ns, const std::string& prefix, std::size_t count) {
    std::vector<EntityId> ids;
    for (std::size_t i = 0; i < count; ++i) {
        ids.push_back(EntityId{ns, prefix + std::to_string(i)});
    }
    return std::make_shared<LabelIndex>(std::move(ids));
}

std::vector<Entry> random_entries(Rng& rng, std::size_t rows, std::size_t cols, double density, double lo, double hi) {
    std::vector<Entry> entries;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (rng.uniform() < density) {
                entries.push_back(Entry{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), rng.uniform(lo, hi)});
            }
        }
    }
    if (entries.empty() && rows > 0 && cols > 0) {
        entries.push_back(Entry{0, 0, rng.uniform(lo, hi)});
    }
    return entries;
}

SourceMatrix random_source(Rng& rng, SourceKind kind, std::uint32_t index, const LabelIndex& global,
                           const InstanceShape& shape) {
    const Namespace ent_ns = kind == SourceKind::User ? Namespace::user() : Namespace::item();
    std::vector<EntityId> rows;
    // shuffled subset of the globals, so local order differs from global order
    for (std::size_t g = 0; g < global.size(); ++g) {
        if (rng.uniform() < 0.6) {
            rows.push_back(global[g]);
        }
    }
    for (std::size_t i = rows.size(); i > 1; --i) {
        std::swap(rows[i - 1], rows[rng.below(i)]);
    }
    const std::size_t priv = rng.below(shape.max_private + 1);
    for (std::size_t p = 0; p < priv; ++p) {
        rows.push_back(EntityId{ent_ns, "p" + std::to_string(index) + "_" + std::to_string(p)});
    }
    if (rows.empty()) {
        rows.push_back(global[0]);
    }
    const std::size_t attrs = 1 + rng.below(shape.max_attributes);
    SourceMatrix s;
    s.kind = kind;
    s.index = index;
    const Namespace attr_ns = s.attribute_namespace();
    const std::size_t n_rows = rows.size();
    s.data = SparseMatrix(std::make_shared<LabelIndex>(std::move(rows)), labels_of(attr_ns, "a", attrs),
                          random_entries(rng, n_rows, attrs, 0.5, -1.0, 1.0));
    return s;
}

/// Source entity vector: the global column when the entity is tied, else the local one.
std::span<const double> entity_vector(const FactorMatrix& local, std::size_t p, const FactorMatrix& global) {
    const EntityId& id = local.labels()[p];
    if (auto g = global.labels().find(id)) {
        return global.col(*g);
    }
    return local.col(p);
}

using Wide = long double;

Wide sq_norm(const FactorMatrix& m) {
    Wide s = 0.0L;
    for (double v : m.values()) {
        s += Wide(v) * v;
    }
    return s;
}

Wide private_sq_norm(const FactorMatrix& local, const FactorMatrix& global) {
    Wide s = 0.0L;
    for (std::size_t p = 0; p < local.n_cols(); ++p) {
        if (global.labels().contains(local.labels()[p])) {
            continue;
        }
        for (double v : local.col(p)) {
            s += Wide(v) * v;
        }
    }
    return s;
}

Wide wide_dot(std::span<const double> a, std::span<const double> b) {
    Wide s = 0.0L;
    for (std::size_t d = 0; d < a.size(); ++d) {
        s += Wide(a[d]) * b[d];
    }
    return s;
}

Wide source_part(const SourceMatrix& src, const SourceFactors& f, const FactorMatrix& global, double lambda_entity,
                 const SourceWeights& w) {
    Wide data = 0.0L;
    for (const Triple& t : to_triples(src.data)) {
        const std::size_t p = *src.data.row_labels().find(EntityId{src.entity_namespace(), t.row});
        const std::size_t a = *src.data.col_labels().find(EntityId{src.attribute_namespace(), t.col});
        const Wide r = t.value - wide_dot(entity_vector(f.entities, p, global), f.attributes.col(a));
        data += r * r;
    }
    return 0.5L * w.lambda_data * data + 0.5L * lambda_entity * private_sq_norm(f.entities, global) +
           0.5L * w.lambda_latent * sq_norm(f.attributes);
}

Wide wide_oracle_loss(const Problem& problem, const ModelState& state, const Hyperparams& hyper) {
    Wide rating = 0.0L;
    for (const Triple& t : to_triples(problem.ratings().ratings)) {
        auto u = state.users.col(*state.users.labels().find(EntityId{Namespace::user(), t.row}));
        auto v = state.items.col(*state.items.labels().find(EntityId{Namespace::item(), t.col}));
        const Wide r = t.value - wide_dot(u, v);
        rating += r * r;
    }
    Wide total = 0.5L * rating + 0.5L * hyper.lambda_U * sq_norm(state.users) +
                 0.5L * hyper.lambda_V * sq_norm(state.items);
    for (std::size_t n = 0; n < state.user_sources.size(); ++n) {
        const auto& src = problem.user_sources()[n].source;
        total += source_part(src, state.user_sources[n], state.users, hyper.lambda_U, hyper.user_source(src.index));
    }
    for (std::size_t m = 0; m < state.item_sources.size(); ++m) {
        const auto& src = problem.item_sources()[m].source;
        total += source_part(src, state.item_sources[m], state.items, hyper.lambda_V, hyper.item_source(src.index));
    }
    return total;
}

}  // namespace

Problem random_problem(std::uint64_t seed, const InstanceShape& shape) {
    Rng rng({seed, stable_hash("random-problem")});
    const std::size_t users = 2 + rng.below(shape.max_users - 1);
    const std::size_t items = 2 + rng.below(shape.max_items - 1);
    auto u = labels_of(Namespace::user(), "u", users);
    auto i = labels_of(Namespace::item(), "i", items);
    RatingDataset ratings{SparseMatrix(u, i, random_entries(rng, users, items, shape.density, 1.0, 5.0)), 1.0, 5.0};
    std::vector<SourceMatrix> sources;
    for (std::size_t n = 0; n < shape.user_sources; ++n) {
        sources.push_back(random_source(rng, SourceKind::User, static_cast<std::uint32_t>(n), *u, shape));
    }
    for (std::size_t m = 0; m < shape.item_sources; ++m) {
        sources.push_back(random_source(rng, SourceKind::Item, static_cast<std::uint32_t>(m), *i, shape));
    }
    return Problem(std::move(ratings), std::move(sources));
}

Hyperparams random_hyper(std::uint64_t seed, std::size_t k, const Problem& problem) {
    Rng rng({seed, stable_hash("random-hyper")});
    Hyperparams h;
    h.k = k;
    h.seed = seed;
    h.lambda_U = rng.uniform(0.05, 0.5);
    h.lambda_V = rng.uniform(0.05, 0.5);
    for (const auto& s : problem.user_sources()) {
        h.user_source_overrides[s.source.index] = SourceWeights{rng.uniform(0.2, 1.5), rng.uniform(0.05, 0.5)};
    }
    for (const auto& s : problem.item_sources()) {
        h.item_source_overrides[s.source.index] = SourceWeights{rng.uniform(0.2, 1.5), rng.uniform(0.05, 0.5)};
    }
    return h;
}

ModelState random_state(const Problem& problem, const Hyperparams& hyper, std::uint64_t seed) {
    ModelState state = init_model_state(problem, hyper);
    Rng rng({seed, stable_hash("random-state")});
    auto fill = [&](FactorMatrix& m) {
        for (double& v : m.values()) {
            v = rng.uniform(-1.0, 1.0);
        }
    };
    fill(state.users);
    fill(state.items);
    for (auto& s : state.user_sources) {
        fill(s.entities);
        fill(s.attributes);
    }
    for (auto& s : state.item_sources) {
        fill(s.entities);
        fill(s.attributes);
    }
    sync_shared(problem, state);
    return state;
}

double oracle_loss(const Problem& problem, const ModelState& state, const Hyperparams& hyper) {
    return static_cast<double>(wide_oracle_loss(problem, state, hyper));
}

void for_each_coordinate(ModelState& state, const ModelGradient& gradient,
                         const std::function<void(const std::string&, double&, double)>& fn) {
    auto visit = [&](FactorMatrix& x, const FactorMatrix& g, const std::string& name) {
        for (std::size_t c = 0; c < x.n_cols(); ++c) {
            for (std::size_t d = 0; d < x.k(); ++d) {
                fn(name + "[" + to_string(x.labels()[c]) + "][" + std::to_string(d) + "]", x(d, c), g(d, c));
            }
        }
    };
    visit(state.users, gradient.users, "U");
    visit(state.items, gradient.items, "V");
    for (std::size_t n = 0; n < state.user_sources.size(); ++n) {
        visit(state.user_sources[n].entities, gradient.user_sources[n].entities, "U^" + std::to_string(n));
        visit(state.user_sources[n].attributes, gradient.user_sources[n].attributes, "Z^U^" + std::to_string(n));
    }
    for (std::size_t m = 0; m < state.item_sources.size(); ++m) {
        visit(state.item_sources[m].entities, gradient.item_sources[m].entities, "V^" + std::to_string(m));
        visit(state.item_sources[m].attributes, gradient.item_sources[m].attributes, "Z^V^" + std::to_string(m));
    }
}

GradientCheck check_gradient(const Problem& problem, const ModelState& state, const Hyperparams& hyper, double step,
                             double floor) {
    const ModelGradient g = grad(problem, state, hyper);
    ModelState probe = state;
    GradientCheck out;
    for_each_coordinate(probe, g, [&](const std::string& where, double& x, double analytic) {
        const double saved = x;
        const double hi = saved + step;
        const double lo = saved - step;
        x = hi;
        const Wide up = wide_oracle_loss(problem, probe, hyper);
        x = lo;
        const Wide down = wide_oracle_loss(problem, probe, hyper);
        x = saved;
        // divide by the step actually realized in storage
        const double numeric = static_cast<double>((up - down) / (Wide(hi) - Wide(lo)));
        const double err = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
        ++out.coordinates;
        if (err > out.worst_relative_error) {
            out.worst_relative_error = err;
            out.worst_where = where;
        }
    });
    return out;
}

double max_abs_diff(const FactorMatrix& a, const FactorMatrix& b) {
    if (a.k() != b.k() || a.n_cols() != b.n_cols() || !(a.labels() == b.labels())) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    }
    return worst;
}

double max_abs_diff(const ModelState& a, const ModelState& b) {
    if (a.user_sources.size() != b.user_sources.size() || a.item_sources.size() != b.item_sources.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = std::max(max_abs_diff(a.users, b.users), max_abs_diff(a.items, b.items));
    for (std::size_t n = 0; n < a.user_sources.size(); ++n) {
        worst = std::max({worst, max_abs_diff(a.user_sources[n].entities, b.user_sources[n].entities),
                          max_abs_diff(a.user_sources[n].attributes, b.user_sources[n].attributes)});
    }
    for (std::size_t m = 0; m < a.item_sources.size(); ++m) {
        worst = std::max({worst, max_abs_diff(a.item_sources[m].entities, b.item_sources[m].entities),
                          max_abs_diff(a.item_sources[m].attributes, b.item_sources[m].attributes)});
    }
    return worst;
}

std::string temp_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / ("dpmf-test-" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

}  // namespace dpmf::test
