#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpmf/sparse_matrix.hpp"

namespace dpmf {

/// User x item rating matrix together with its rating scale.
struct RatingDataset {
    SparseMatrix ratings;
    double scale_lo = 0.0;
    double scale_hi = 1.0;

    /// scale_lo < scale_hi, every rating inside the scale, rows are users and
    /// columns are items.
    void validate() const;
};

enum class SourceKind : std::uint8_t { User, Item };

std::string_view to_string(SourceKind kind);

/// Entity x attribute matrix held by one source. For a user source the rows
/// are users and the columns are attributes of namespace UserAttribute(index);
/// item sources are the mirror image.
struct SourceMatrix {
    SourceKind kind = SourceKind::User;
    std::uint32_t index = 0;
    SparseMatrix data;

    Namespace entity_namespace() const {
        return kind == SourceKind::User ? Namespace::user() : Namespace::item();
    }
    Namespace attribute_namespace() const {
        return kind == SourceKind::User ? Namespace::user_attribute(index) : Namespace::item_attribute(index);
    }

    void validate() const;
};

struct SharedEntity {
    std::size_t local;
    std::size_t global;

    friend bool operator==(const SharedEntity&, const SharedEntity&) = default;
};

/// Entities a source shares with the rating matrix, in global order.
struct AlignmentReport {
    std::vector<SharedEntity> shared;
    /// Per local row: true when the row is shared with the global namespace.
    std::vector<bool> is_shared;

    std::size_t shared_count() const { return shared.size(); }

    friend bool operator==(const AlignmentReport&, const AlignmentReport&) = default;
};

/// Matches the source's entity rows against the global users (user source)
/// or items (item source) by exact EntityId. An empty overlap is legal.
AlignmentReport align_source(const SourceMatrix& source, const LabelIndex& global_users,
                             const LabelIndex& global_items);

/// Alignment of an arbitrary local label list against a global one.
AlignmentReport align_labels(const LabelIndex& local, const LabelIndex& global);

struct AlignedSource {
    SourceMatrix source;
    AlignmentReport alignment;
};

/// Rating matrix plus its side sources, validated and aligned. Sources are
/// kept sorted by ascending index within each kind; that order is the
/// canonical merge order everywhere.
class Problem {
public:
    Problem() = default;
    Problem(RatingDataset ratings, std::vector<SourceMatrix> sources);

    const RatingDataset& ratings() const { return ratings_; }
    const LabelIndex& users() const { return ratings_.ratings.row_labels(); }
    const LabelIndex& items() const { return ratings_.ratings.col_labels(); }

    std::span<const AlignedSource> user_sources() const { return user_sources_; }
    std::span<const AlignedSource> item_sources() const { return item_sources_; }

    /// Total observed entries across R and every source.
    std::size_t total_nnz() const;

private:
    RatingDataset ratings_;
    std::vector<AlignedSource> user_sources_;
    std::vector<AlignedSource> item_sources_;
};

}  // namespace dpmf
