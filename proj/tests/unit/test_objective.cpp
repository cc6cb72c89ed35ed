#include <doctest.h>

#include <cmath>

#include "dpmf/errors.hpp"
#include "dpmf/objective.hpp"
#include "support.hpp"

using namespace dpmf;

namespace {

Hyperparams zero_lambdas(std::size_t k) {
    Hyperparams h;
    h.k = k;
    h.lambda_U = 0.0;
    h.lambda_V = 0.0;
    h.user_source_default = {0.0, 0.0};
    h.item_source_default = {0.0, 0.0};
    return h;
}

ModelState zero_state(const Problem& p, const Hyperparams& h) {
    ModelState s = init_model_state(p, h);
    auto zero = [](FactorMatrix& m) {
        for (double& v : m.values()) v = 0.0;
    };
    zero(s.users);
    zero(s.items);
    for (auto& f : s.user_sources) {
        zero(f.entities);
        zero(f.attributes);
    }
    for (auto& f : s.item_sources) {
        zero(f.entities);
        zero(f.attributes);
    }
    return s;
}

FactorMatrix labeled(std::initializer_list<const char*> keys, std::vector<double> values, std::size_t k) {
    std::vector<EntityId> ids;
    for (const char* key : keys) {
        ids.push_back(EntityId{Namespace::user(), key});
    }
    return FactorMatrix(k, std::make_shared<LabelIndex>(std::move(ids)), std::move(values));
}

Problem ratings_only(std::vector<Triple> triples, double lo = 0.0, double hi = 5.0) {
    return Problem(RatingDataset{build_sparse(triples, Namespace::user(), Namespace::item()), lo, hi}, {});
}

}  // namespace

TEST_CASE("zero factors, no sources, zero lambdas") {
    auto p = ratings_only({{"u1", "i1", 1.0}, {"u2", "i2", 2.0}});
    auto h = zero_lambdas(2);
    auto l = loss(p, zero_state(p, h), h);
    CHECK(l.total == 2.5);
    CHECK(l.rating_term == 2.5);
}

TEST_CASE("empty ratings with zero factors has zero loss") {
    auto p = ratings_only({});
    auto h = zero_lambdas(2);
    h.lambda_U = 1.0;
    h.lambda_V = 1.0;
    CHECK(loss(p, zero_state(p, h), h).total == 0.0);
}

TEST_CASE("loss matches the brute-force oracle") {
    SUBCASE("4x3 ratings with one 2x2 user source") {
        // 4 users, 3 items, nnz 5; source over two of the users, nnz 2
        std::vector<Triple> r{{"u1", "i1", 4.0}, {"u2", "i2", 1.5}, {"u3", "i3", 3.0}, {"u4", "i1", 2.0},
                              {"u1", "i3", 5.0}};
        std::vector<Triple> s{{"u2", "t1", 0.7}, {"u4", "t2", -0.3}};
        Problem p(RatingDataset{build_sparse(r, Namespace::user(), Namespace::item()), 1.0, 5.0},
                  {SourceMatrix{SourceKind::User, 0, build_sparse(s, Namespace::user(), Namespace::user_attribute(0))}});
        Hyperparams h;
        h.k = 3;
        h.lambda_U = 0.3;
        h.lambda_V = 0.2;
        h.user_source_default = {0.9, 0.15};
        auto state = test::random_state(p, h, 11);
        auto l = loss(p, state, h);
        CHECK(l.total == doctest::Approx(test::oracle_loss(p, state, h)).epsilon(1e-12));
    }
    SUBCASE("random instances with user and item sources") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto p = test::random_problem(seed, {.user_sources = 2, .item_sources = 2});
            auto h = test::random_hyper(seed, 1 + seed % 4, p);
            auto state = test::random_state(p, h, seed);
            CHECK(loss(p, state, h).total == doctest::Approx(test::oracle_loss(p, state, h)).epsilon(1e-12));
        }
    }
}

TEST_CASE("loss breakdown parts sum to the total") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = test::random_problem(seed, {.user_sources = 2, .item_sources = 1});
        auto h = test::random_hyper(seed, 3, p);
        auto l = loss(p, test::random_state(p, h, seed), h);
        double parts = l.rating_term + l.regularization;
        for (double t : l.user_source_terms) parts += t;
        for (double t : l.item_source_terms) parts += t;
        CHECK(parts == doctest::Approx(l.total).epsilon(1e-12));
        CHECK(l.user_source_terms.size() == 2);
        CHECK(l.item_source_terms.size() == 1);
    }
}

TEST_CASE("with no sources and zero lambdas the loss is the plain MF objective") {
    auto p = test::random_problem(5, {.user_sources = 0, .item_sources = 0});
    auto h = zero_lambdas(2);
    auto state = test::random_state(p, h, 5);
    double expect = 0.0;
    for (const Entry& e : p.ratings().ratings.entries()) {
        const double r = e.value - dot(state.users.col(e.row), state.items.col(e.col));
        expect += 0.5 * r * r;
    }
    CHECK(loss(p, state, h).total == expect);
}

TEST_CASE("zero factors and zero lambdas give a zero gradient") {
    auto p = test::random_problem(2, {.user_sources = 1, .item_sources = 1});
    auto h = zero_lambdas(3);
    auto g = grad(p, zero_state(p, h), h);
    auto all_zero = [](const FactorMatrix& m) {
        for (double v : m.values()) {
            if (v != 0.0) return false;
        }
        return true;
    };
    CHECK(all_zero(g.users));
    CHECK(all_zero(g.items));
    CHECK(all_zero(g.user_sources[0].entities));
    CHECK(all_zero(g.user_sources[0].attributes));
    CHECK(all_zero(g.item_sources[0].entities));
    CHECK(all_zero(g.item_sources[0].attributes));
}

TEST_CASE("perfect fit of a single rating is stationary") {
    auto p = ratings_only({{"u1", "i1", 1.0}});
    auto h = zero_lambdas(2);
    auto s = zero_state(p, h);
    s.users(0, 0) = 1.0;
    s.items(0, 0) = 1.0;
    auto g = grad(p, s, h);
    CHECK(g.users(0, 0) == 0.0);
    CHECK(g.users(1, 0) == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto p = test::random_problem(seed, {.user_sources = 2, .item_sources = 2});
        auto h = test::random_hyper(seed, 1 + seed % 4, p);
        auto state = test::random_state(p, h, seed + 100);
        auto check = test::check_gradient(p, state, h);
        INFO("seed " << seed << " worst at " << check.worst_where);
        CHECK(check.coordinates > 0);
        CHECK(check.worst_relative_error <= 1e-5);
    }
}

TEST_CASE("evaluate agrees with loss and grad") {
    auto p = test::random_problem(9, {.user_sources = 2, .item_sources = 2});
    auto h = test::random_hyper(9, 3, p);
    auto s = test::random_state(p, h, 9);
    auto e = evaluate(p, s, h);
    CHECK(e.loss.total == loss(p, s, h).total);
    CHECK(e.gradient == grad(p, s, h));
}

TEST_CASE("shape mismatches are rejected") {
    auto p = test::random_problem(1);
    auto h = test::random_hyper(1, 2, p);
    auto s = test::random_state(p, h, 1);
    auto wrong_k = h;
    wrong_k.k = 3;
    CHECK_THROWS_AS(loss(p, s, wrong_k), DimensionMismatch);
    s.user_sources.clear();
    CHECK_THROWS_AS(grad(p, s, h), DimensionMismatch);
}

TEST_CASE("oplus: empty right operand is the identity") {
    auto a = labeled({"u1", "u2"}, {1, 3, 2, 4}, 2);
    auto empty = FactorMatrix(2, std::make_shared<LabelIndex>());
    CHECK(oplus(a, empty) == a);
}

TEST_CASE("oplus: matching label is added") {
    // columns (u1,u2) = [[1,2],[3,4]] in row-major reading, so u1=(1,3), u2=(2,4)
    auto a = labeled({"u1", "u2"}, {1, 3, 2, 4}, 2);
    auto b = labeled({"u2"}, {10, 20}, 2);
    auto c = oplus(a, b);
    CHECK(c == labeled({"u1", "u2"}, {1, 3, 12, 24}, 2));
}

TEST_CASE("oplus: disjoint labels leave A unchanged") {
    auto a = labeled({"u1", "u2"}, {1, 3, 2, 4}, 2);
    auto b = labeled({"u3"}, {10, 20}, 2);
    CHECK(oplus(a, b) == a);
}

TEST_CASE("oplus: row count mismatch") {
    auto a = labeled({"u1"}, {1, 2}, 2);
    auto b = labeled({"u1"}, {1, 2, 3}, 3);
    CHECK_THROWS_AS(oplus(a, b), RowCountMismatch);
}

TEST_CASE("oplus is commutative over identical label sets") {
    auto a = labeled({"u1", "u2"}, {0.1, 0.2, 0.3, 0.4}, 2);
    auto b = labeled({"u1", "u2"}, {1.5, -2.5, 3.25, 7.0}, 2);
    auto c = labeled({"u1", "u2"}, {-0.5, 0.125, 2.0, -1.0}, 2);
    CHECK(oplus(a, b) == oplus(b, a));
    CHECK(test::max_abs_diff(oplus(oplus(a, b), c), oplus(a, oplus(b, c))) < 1e-15);
}

TEST_CASE("predict clamps to the scale") {
    auto p = ratings_only({{"u1", "i1", 1.0}});
    auto h = zero_lambdas(2);
    auto s = zero_state(p, h);
    const EntityId u{Namespace::user(), "u1"};
    const EntityId i{Namespace::item(), "i1"};
    CHECK(predict(s, u, i, 0.0, 1.0) == 0.0);

    s.users(0, 0) = 2.0;
    s.items(0, 0) = 3.0;
    CHECK(predict(s, u, i, 1.0, 5.0) == 5.0);

    s.users(0, 0) = 0.5;
    s.users(1, 0) = 0.5;
    s.items(0, 0) = 1.0;
    s.items(1, 0) = 1.0;
    CHECK(predict(s, u, i, 0.0, 5.0) == 1.0);

    CHECK_THROWS_AS(predict(s, EntityId{Namespace::user(), "nobody"}, i, 0.0, 5.0), UnknownEntity);
    CHECK_THROWS_AS(predict(s, u, EntityId{Namespace::item(), "nothing"}, 0.0, 5.0), UnknownEntity);
}

TEST_CASE("loss is invariant under a joint column permutation") {
    std::vector<Triple> r{{"u1", "i1", 4.0}, {"u2", "i2", 1.5}, {"u3", "i1", 3.0}, {"u1", "i2", 2.0}};
    std::vector<Triple> r_perm{{"u3", "i1", 3.0}, {"u2", "i2", 1.5}, {"u1", "i2", 2.0}, {"u1", "i1", 4.0}};
    Problem a = ratings_only(r, 1.0, 5.0);
    Problem b = ratings_only(r_perm, 1.0, 5.0);
    Hyperparams h;
    h.k = 2;
    auto sa = test::random_state(a, h, 3);
    auto sb = init_model_state(b, h);
    for (std::size_t c = 0; c < sb.users.n_cols(); ++c) {
        auto src = sa.users.col(*sa.users.labels().find(sb.users.labels()[c]));
        std::copy(src.begin(), src.end(), sb.users.col(c).begin());
    }
    for (std::size_t c = 0; c < sb.items.n_cols(); ++c) {
        auto src = sa.items.col(*sa.items.labels().find(sb.items.labels()[c]));
        std::copy(src.begin(), src.end(), sb.items.col(c).begin());
    }
    CHECK(loss(a, sa, h).total == doctest::Approx(loss(b, sb, h).total).epsilon(1e-14));
}

TEST_CASE("apply_step reports the largest update") {
    auto p = test::random_problem(4);
    auto h = test::random_hyper(4, 2, p);
    auto s = test::random_state(p, h, 4);
    auto before = s;
    auto g = grad(p, s, h);
    const double m = apply_step(s, g, 0.01);
    double expect = 0.0;
    for (double v : g.users.values()) expect = std::max(expect, std::abs(0.01 * v));
    for (double v : g.items.values()) expect = std::max(expect, std::abs(0.01 * v));
    for (const auto& f : g.user_sources) {
        for (double v : f.entities.values()) expect = std::max(expect, std::abs(0.01 * v));
        for (double v : f.attributes.values()) expect = std::max(expect, std::abs(0.01 * v));
    }
    for (const auto& f : g.item_sources) {
        for (double v : f.entities.values()) expect = std::max(expect, std::abs(0.01 * v));
        for (double v : f.attributes.values()) expect = std::max(expect, std::abs(0.01 * v));
    }
    CHECK(m == expect);
    CHECK(test::max_abs_diff(s, before) == doctest::Approx(m).epsilon(1e-12));
}
