#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dpmf/hyperparams.hpp"
#include "dpmf/sparse_matrix.hpp"

namespace dpmf {

/// Dense k x n latent matrix. Column c embeds the entity `labels()[c]`;
/// storage is column-major so each latent vector is contiguous.
class FactorMatrix {
public:
    FactorMatrix() = default;

    /// Zero-filled.
    FactorMatrix(std::size_t k, LabelsPtr labels);

    FactorMatrix(std::size_t k, LabelsPtr labels, std::vector<double> values);

    std::size_t k() const { return k_; }
    std::size_t n_cols() const { return labels_ ? labels_->size() : 0; }

    const LabelIndex& labels() const { return *labels_; }
    const LabelsPtr& labels_ptr() const { return labels_; }

    std::span<double> col(std::size_t c) { return {values_.data() + c * k_, k_}; }
    std::span<const double> col(std::size_t c) const { return {values_.data() + c * k_, k_}; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double& operator()(std::size_t row, std::size_t c) { return values_[c * k_ + row]; }
    double operator()(std::size_t row, std::size_t c) const { return values_[c * k_ + row]; }

    double squared_norm() const;
    bool all_finite() const;

    friend bool operator==(const FactorMatrix& a, const FactorMatrix& b);

private:
    std::size_t k_ = 0;
    LabelsPtr labels_;
    std::vector<double> values_;
};

/// Small uniform random factors in [-init_scale, +init_scale].
///
/// The stream is seeded by (hyper.seed, role, ns) only, so two trainers that
/// initialize the same role get bitwise-identical matrices.
FactorMatrix init_factors(LabelsPtr labels, const Hyperparams& hyper, std::string_view role, Namespace ns);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace dpmf
