#include "dpmf/factor_matrix.hpp"

#include <cmath>

#include "dpmf/errors.hpp"
#include "dpmf/rng.hpp"

namespace dpmf {

FactorMatrix::FactorMatrix(std::size_t k, LabelsPtr labels)
    : k_(k), labels_(labels ? std::move(labels) : std::make_shared<LabelIndex>()),
      values_(k_ * labels_->size(), 0.0) {}

FactorMatrix::FactorMatrix(std::size_t k, LabelsPtr labels, std::vector<double> values)
    : k_(k), labels_(labels ? std::move(labels) : std::make_shared<LabelIndex>()), values_(std::move(values)) {
    if (values_.size() != k_ * labels_->size()) {
        throw DimensionMismatch("factor matrix holds " + std::to_string(values_.size()) + " values, expected " +
                                std::to_string(k_) + "x" + std::to_string(labels_->size()));
    }
}

bool FactorMatrix::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

double FactorMatrix::squared_norm() const {
    double sum = 0.0;
    for (double v : values_) {
        sum += v * v;
    }
    return sum;
}

bool operator==(const FactorMatrix& a, const FactorMatrix& b) {
    if (a.k_ != b.k_ || a.values_ != b.values_) {
        return false;
    }
    if (a.labels_ == b.labels_) {
        return true;
    }
    return a.labels_ && b.labels_ && *a.labels_ == *b.labels_;
}

FactorMatrix init_factors(LabelsPtr labels, const Hyperparams& hyper, std::string_view role, Namespace ns) {
    if (hyper.k < 1) {
        throw InvalidArgument("k must be >= 1");
    }
    FactorMatrix out(hyper.k, std::move(labels));
    Rng rng({hyper.seed, stable_hash(role), static_cast<std::uint64_t>(ns.space), ns.source});
    const double s = hyper.init_scale;
    for (double& v : out.values()) {
        v = s * (2.0 * rng.uniform() - 1.0);
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

}  // namespace dpmf
