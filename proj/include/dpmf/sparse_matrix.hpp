#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpmf/entity.hpp"

namespace dpmf {

struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double value;

    friend bool operator==(const Entry&, const Entry&) = default;
};

struct Triple {
    std::string row;
    std::string col;
    double value;
};

using LabelsPtr = std::shared_ptr<const LabelIndex>;

/// Coordinate-form sparse matrix with labeled rows and columns.
///
/// Entries keep their construction order; every iteration over the matrix
/// derives from it, so results are reproducible. `observed(r, c)` is the
/// indicator function of the matrix: true exactly where an entry exists.
class SparseMatrix {
public:
    SparseMatrix();

    /// Validates bounds, finiteness and coordinate uniqueness.
    SparseMatrix(LabelsPtr rows, LabelsPtr cols, std::vector<Entry> entries);

    std::size_t n_rows() const { return rows_->size(); }
    std::size_t n_cols() const { return cols_->size(); }
    std::size_t nnz() const { return entries_.size(); }

    const LabelIndex& row_labels() const { return *rows_; }
    const LabelIndex& col_labels() const { return *cols_; }
    const LabelsPtr& row_labels_ptr() const { return rows_; }
    const LabelsPtr& col_labels_ptr() const { return cols_; }

    std::span<const Entry> entries() const { return entries_; }

    bool observed(std::size_t row, std::size_t col) const;
    std::optional<double> value(std::size_t row, std::size_t col) const;

    /// Same labels, different entries. Used by splitting.
    SparseMatrix with_entries(std::vector<Entry> entries) const;

    /// Number of entries in each row (resp. column).
    std::vector<std::size_t> row_counts() const;
    std::vector<std::size_t> col_counts() const;

    friend bool operator==(const SparseMatrix& a, const SparseMatrix& b);

private:
    static std::uint64_t key(std::size_t row, std::size_t col) {
        return (static_cast<std::uint64_t>(row) << 32) | static_cast<std::uint64_t>(col);
    }

    LabelsPtr rows_;
    LabelsPtr cols_;
    std::vector<Entry> entries_;
    std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

/// Builds a matrix from keyed triples. Labels are assigned in order of first
/// appearance. Throws NonFiniteValue or DuplicateCoordinate.
SparseMatrix build_sparse(std::span<const Triple> triples, Namespace row_ns, Namespace col_ns);

std::vector<Triple> to_triples(const SparseMatrix& matrix);

}  // namespace dpmf
