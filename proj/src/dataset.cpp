#include "dpmf/dataset.hpp"

#include <algorithm>
#include <set>

#include "dpmf/errors.hpp"

namespace dpmf {

namespace {

void require_namespace(const LabelIndex& labels, Namespace ns, const std::string& what) {
    for (const EntityId& id : labels.labels()) {
        if (id.ns != ns) {
            throw InvalidArgument(what + " label " + to_string(id) + " is not in namespace " + to_string(ns));
        }
    }
}

}  // namespace

void RatingDataset::validate() const {
    if (!(scale_lo < scale_hi)) {
        throw InvalidArgument("rating scale must satisfy lo < hi");
    }
    require_namespace(ratings.row_labels(), Namespace::user(), "rating row");
    require_namespace(ratings.col_labels(), Namespace::item(), "rating column");
    for (const Entry& e : ratings.entries()) {
        if (e.value < scale_lo || e.value > scale_hi) {
            throw InvalidArgument("rating " + std::to_string(e.value) + " for (" + ratings.row_labels()[e.row].key +
                                  ", " + ratings.col_labels()[e.col].key + ") outside the rating scale");
        }
    }
}

std::string_view to_string(SourceKind kind) {
    return kind == SourceKind::User ? "user" : "item";
}

void SourceMatrix::validate() const {
    const std::string what = std::string(to_string(kind)) + " source " + std::to_string(index);
    require_namespace(data.row_labels(), entity_namespace(), what + " row");
    require_namespace(data.col_labels(), attribute_namespace(), what + " column");
}

AlignmentReport align_labels(const LabelIndex& local, const LabelIndex& global) {
    AlignmentReport report;
    report.is_shared.assign(local.size(), false);
    for (std::size_t p = 0; p < local.size(); ++p) {
        if (auto g = global.find(local[p])) {
            report.shared.push_back(SharedEntity{p, *g});
            report.is_shared[p] = true;
        }
    }
    std::sort(report.shared.begin(), report.shared.end(),
              [](const SharedEntity& a, const SharedEntity& b) { return a.global < b.global; });
    return report;
}

AlignmentReport align_source(const SourceMatrix& source, const LabelIndex& global_users,
                             const LabelIndex& global_items) {
    const LabelIndex& global = source.kind == SourceKind::User ? global_users : global_items;
    return align_labels(source.data.row_labels(), global);
}

Problem::Problem(RatingDataset ratings, std::vector<SourceMatrix> sources) : ratings_(std::move(ratings)) {
    ratings_.validate();
    std::set<std::pair<SourceKind, std::uint32_t>> seen;
    for (SourceMatrix& s : sources) {
        s.validate();
        if (!seen.emplace(s.kind, s.index).second) {
            throw InvalidArgument("duplicate " + std::string(to_string(s.kind)) + " source index " +
                                  std::to_string(s.index));
        }
        AlignmentReport report = align_source(s, users(), items());
        auto& target = s.kind == SourceKind::User ? user_sources_ : item_sources_;
        target.push_back(AlignedSource{std::move(s), std::move(report)});
    }
    auto by_index = [](const AlignedSource& a, const AlignedSource& b) { return a.source.index < b.source.index; };
    std::sort(user_sources_.begin(), user_sources_.end(), by_index);
    std::sort(item_sources_.begin(), item_sources_.end(), by_index);
}

std::size_t Problem::total_nnz() const {
    std::size_t total = ratings_.ratings.nnz();
    for (const auto& s : user_sources_) {
        total += s.source.data.nnz();
    }
    for (const auto& s : item_sources_) {
        total += s.source.data.nnz();
    }
    return total;
}

}  // namespace dpmf
