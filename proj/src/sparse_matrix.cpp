#include "dpmf/sparse_matrix.hpp"

#include <cmath>
#include <limits>

#include "dpmf/errors.hpp"

namespace dpmf {

SparseMatrix::SparseMatrix()
    : rows_(std::make_shared<LabelIndex>()), cols_(std::make_shared<LabelIndex>()) {}

SparseMatrix::SparseMatrix(LabelsPtr rows, LabelsPtr cols, std::vector<Entry> entries)
    : rows_(rows ? std::move(rows) : std::make_shared<LabelIndex>()),
      cols_(cols ? std::move(cols) : std::make_shared<LabelIndex>()),
      entries_(std::move(entries)) {
    if (rows_->size() > std::numeric_limits<std::uint32_t>::max() ||
        cols_->size() > std::numeric_limits<std::uint32_t>::max()) {
        throw DimensionMismatch("sparse matrix dimensions exceed 32-bit indices");
    }
    lookup_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const Entry& e = entries_[i];
        if (e.row >= rows_->size() || e.col >= cols_->size()) {
            throw DimensionMismatch("entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                                    ") outside " + std::to_string(rows_->size()) + "x" +
                                    std::to_string(cols_->size()));
        }
        if (!std::isfinite(e.value)) {
            throw NonFiniteValue("non-finite value at (" + (*rows_)[e.row].key + ", " + (*cols_)[e.col].key + ")");
        }
        if (!lookup_.emplace(key(e.row, e.col), i).second) {
            throw DuplicateCoordinate((*rows_)[e.row].key, (*cols_)[e.col].key);
        }
    }
}

bool SparseMatrix::observed(std::size_t row, std::size_t col) const {
    return lookup_.contains(key(row, col));
}

std::optional<double> SparseMatrix::value(std::size_t row, std::size_t col) const {
    auto it = lookup_.find(key(row, col));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return entries_[it->second].value;
}

SparseMatrix SparseMatrix::with_entries(std::vector<Entry> entries) const {
    return SparseMatrix(rows_, cols_, std::move(entries));
}

std::vector<std::size_t> SparseMatrix::row_counts() const {
    std::vector<std::size_t> counts(n_rows(), 0);
    for (const Entry& e : entries_) {
        ++counts[e.row];
    }
    return counts;
}

std::vector<std::size_t> SparseMatrix::col_counts() const {
    std::vector<std::size_t> counts(n_cols(), 0);
    for (const Entry& e : entries_) {
        ++counts[e.col];
    }
    return counts;
}

bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
    return *a.rows_ == *b.rows_ && *a.cols_ == *b.cols_ && a.entries_ == b.entries_;
}

SparseMatrix build_sparse(std::span<const Triple> triples, Namespace row_ns, Namespace col_ns) {
    auto rows = std::make_shared<LabelIndex>();
    auto cols = std::make_shared<LabelIndex>();
    std::vector<Entry> entries;
    entries.reserve(triples.size());
    for (const Triple& t : triples) {
        if (!std::isfinite(t.value)) {
            throw NonFiniteValue("non-finite value at (" + t.row + ", " + t.col + ")");
        }
        auto r = rows->add(EntityId{row_ns, t.row});
        auto c = cols->add(EntityId{col_ns, t.col});
        entries.push_back(Entry{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), t.value});
    }
    return SparseMatrix(std::move(rows), std::move(cols), std::move(entries));
}

std::vector<Triple> to_triples(const SparseMatrix& matrix) {
    std::vector<Triple> out;
    out.reserve(matrix.nnz());
    for (const Entry& e : matrix.entries()) {
        out.push_back(Triple{matrix.row_labels()[e.row].key, matrix.col_labels()[e.col].key, e.value});
    }
    return out;
}

}  // namespace dpmf
