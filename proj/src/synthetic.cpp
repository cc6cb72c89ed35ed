#include "dpmf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "dpmf/errors.hpp"
#include "dpmf/rng.hpp"

namespace dpmf {

namespace {

using Factors = std::vector<std::vector<double>>;

Factors draw_factors(Rng& rng, std::size_t count, std::size_t k, double mean, double sd) {
    Factors out(count, std::vector<double>(k));
    for (auto& row : out) {
        for (double& v : row) {
            v = rng.normal(mean, sd);
        }
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        sum += a[d] * b[d];
    }
    return sum;
}

/// Sampler over indices with probability proportional to the given weights.
class WeightedPicker {
public:
    explicit WeightedPicker(const std::vector<double>& weights) : cumulative_(weights.size()) {
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            total += weights[i];
            cumulative_[i] = total;
        }
    }

    std::size_t pick(Rng& rng) const {
        const double x = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

private:
    std::vector<double> cumulative_;
};

std::vector<double> lognormal_weights(Rng& rng, std::size_t count, double sigma) {
    std::vector<double> w(count);
    for (double& v : w) {
        v = std::exp(sigma * rng.normal());
    }
    return w;
}

LabelsPtr make_labels(Namespace ns, const std::string& prefix, std::size_t count) {
    std::vector<EntityId> ids;
    ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ids.push_back(EntityId{ns, prefix + std::to_string(i)});
    }
    return std::make_shared<LabelIndex>(std::move(ids));
}

SourceMatrix make_source(const SyntheticConfig& cfg, SourceKind kind, std::uint32_t index, const LabelIndex& global,
                         const Factors& truth, double mean) {
    const bool user_side = kind == SourceKind::User;
    Rng rng({cfg.seed, stable_hash(user_side ? "user-source" : "item-source"), index});

    std::vector<EntityId> rows;
    Factors row_factors;
    for (std::size_t g = 0; g < global.size(); ++g) {
        if (rng.uniform() < cfg.source_overlap) {
            rows.push_back(global[g]);
            row_factors.push_back(truth[g]);
        }
    }
    const std::string private_prefix = (user_side ? "pu" : "pi") + std::to_string(index) + "_";
    const Namespace entity_ns = user_side ? Namespace::user() : Namespace::item();
    Factors private_factors = draw_factors(rng, cfg.private_entities, cfg.k, mean, cfg.factor_sd);
    for (std::size_t p = 0; p < cfg.private_entities; ++p) {
        rows.push_back(EntityId{entity_ns, private_prefix + std::to_string(p)});
        row_factors.push_back(private_factors[p]);
    }
    if (!cfg.informative) {
        row_factors = draw_factors(rng, rows.size(), cfg.k, mean, cfg.factor_sd);
    }

    const Namespace attr_ns = user_side ? Namespace::user_attribute(index) : Namespace::item_attribute(index);
    auto attrs = make_labels(attr_ns, (user_side ? "ua" : "ia") + std::to_string(index) + "_", cfg.attributes_per_source);
    Factors attr_factors = draw_factors(rng, cfg.attributes_per_source, cfg.k, mean, cfg.factor_sd);

    std::vector<Entry> entries;
    for (std::size_t p = 0; p < rows.size(); ++p) {
        const std::size_t before = entries.size();
        for (std::size_t a = 0; a < cfg.attributes_per_source; ++a) {
            if (rng.uniform() < cfg.source_density) {
                entries.push_back(Entry{static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(a), 0.0});
            }
        }
        if (entries.size() == before && cfg.attributes_per_source > 0) {
            entries.push_back(Entry{static_cast<std::uint32_t>(p),
                                    static_cast<std::uint32_t>(rng.below(cfg.attributes_per_source)), 0.0});
        }
    }
    for (Entry& e : entries) {
        e.value = dot(row_factors[e.row], attr_factors[e.col]) + rng.normal(0.0, cfg.source_noise_sd);
    }
    return SourceMatrix{kind, index,
                        SparseMatrix(std::make_shared<LabelIndex>(std::move(rows)), std::move(attrs), std::move(entries))};
}

}  // namespace

void SyntheticConfig::validate() const {
    if (users == 0 || items == 0 || k == 0) {
        throw InvalidArgument("users, items and k must be positive");
    }
    if (!(density > 0.0 && density <= 1.0)) {
        throw InvalidArgument("density must lie in (0, 1]");
    }
    if (!(scale_lo < scale_hi)) {
        throw InvalidArgument("rating scale must satisfy lo < hi");
    }
    if (!(source_density > 0.0 && source_density <= 1.0)) {
        throw InvalidArgument("source density must lie in (0, 1]");
    }
    if (!(source_overlap >= 0.0 && source_overlap <= 1.0)) {
        throw InvalidArgument("source overlap must lie in [0, 1]");
    }
    if (factor_sd < 0.0 || noise_sd < 0.0 || source_noise_sd < 0.0 || activity_skew < 0.0) {
        throw InvalidArgument("standard deviations must be >= 0");
    }
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    const double center = 0.5 * (cfg.scale_lo + cfg.scale_hi);
    const double mean = std::sqrt(std::max(center, 0.0) / static_cast<double>(cfg.k));

    Rng truth_rng({cfg.seed, stable_hash("truth")});
    const Factors user_truth = draw_factors(truth_rng, cfg.users, cfg.k, mean, cfg.factor_sd);
    const Factors item_truth = draw_factors(truth_rng, cfg.items, cfg.k, mean, cfg.factor_sd);

    Rng rng({cfg.seed, stable_hash("ratings")});
    const WeightedPicker user_picker(lognormal_weights(rng, cfg.users, cfg.activity_skew));
    const WeightedPicker item_picker(lognormal_weights(rng, cfg.items, cfg.activity_skew));

    const std::uint64_t cells = static_cast<std::uint64_t>(cfg.users) * cfg.items;
    const std::uint64_t target = std::clamp<std::uint64_t>(
        static_cast<std::uint64_t>(std::llround(cfg.density * static_cast<double>(cells))),
        std::max(cfg.users, cfg.items), cells);

    std::unordered_set<std::uint64_t> taken;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> chosen;
    auto take = [&](std::size_t u, std::size_t i) {
        if (taken.insert(static_cast<std::uint64_t>(u) * cfg.items + i).second) {
            chosen.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(i));
        }
    };
    // every user and every item gets at least one rating
    for (std::size_t u = 0; u < cfg.users; ++u) {
        take(u, item_picker.pick(rng));
    }
    std::vector<bool> item_seen(cfg.items, false);
    for (const auto& c : chosen) {
        item_seen[c.second] = true;
    }
    for (std::size_t i = 0; i < cfg.items; ++i) {
        if (!item_seen[i]) {
            take(user_picker.pick(rng), i);
        }
    }
    std::size_t misses = 0;
    while (chosen.size() < target) {
        const std::size_t before = chosen.size();
        take(user_picker.pick(rng), item_picker.pick(rng));
        misses = chosen.size() == before ? misses + 1 : 0;
        if (misses > 10000) {
            // heavy skew near saturation: fill the remainder uniformly
            for (std::uint64_t cell = 0; cell < cells && chosen.size() < target; ++cell) {
                take(static_cast<std::size_t>(cell / cfg.items), static_cast<std::size_t>(cell % cfg.items));
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());

    std::vector<Entry> entries;
    entries.reserve(chosen.size());
    for (const auto& [u, i] : chosen) {
        const double raw = dot(user_truth[u], item_truth[i]) + rng.normal(0.0, cfg.noise_sd);
        entries.push_back(Entry{u, i, std::clamp(raw, cfg.scale_lo, cfg.scale_hi)});
    }

    SyntheticData out;
    auto users = make_labels(Namespace::user(), "u", cfg.users);
    auto items = make_labels(Namespace::item(), "i", cfg.items);
    out.ratings = RatingDataset{SparseMatrix(users, items, std::move(entries)), cfg.scale_lo, cfg.scale_hi};
    for (std::size_t n = 0; n < cfg.user_sources; ++n) {
        out.sources.push_back(
            make_source(cfg, SourceKind::User, static_cast<std::uint32_t>(n), *users, user_truth, mean));
    }
    for (std::size_t m = 0; m < cfg.item_sources; ++m) {
        out.sources.push_back(
            make_source(cfg, SourceKind::Item, static_cast<std::uint32_t>(m), *items, item_truth, mean));
    }
    return out;
}

}  // namespace dpmf
