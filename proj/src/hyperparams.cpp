#include "dpmf/hyperparams.hpp"

#include <cmath>
#include <string>

#include "dpmf/errors.hpp"

namespace dpmf {

namespace {

void require_weight(double value, const std::string& name) {
    if (std::isnan(value) || value < 0.0) {
        throw InvalidArgument(name + " must be >= 0");
    }
}

void require_weights(const SourceWeights& w, const std::string& name) {
    require_weight(w.lambda_data, name + ".lambda_data");
    require_weight(w.lambda_latent, name + ".lambda_latent");
}

}  // namespace

SourceWeights Hyperparams::user_source(std::uint32_t n) const {
    auto it = user_source_overrides.find(n);
    return it == user_source_overrides.end() ? user_source_default : it->second;
}

SourceWeights Hyperparams::item_source(std::uint32_t m) const {
    auto it = item_source_overrides.find(m);
    return it == item_source_overrides.end() ? item_source_default : it->second;
}

void Hyperparams::validate() const {
    if (k < 1) {
        throw InvalidArgument("k must be >= 1");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw InvalidArgument("alpha must be a positive finite number");
    }
    if (std::isnan(epsilon) || epsilon < 0.0) {
        throw InvalidArgument("epsilon must be >= 0");
    }
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
        throw InvalidArgument("init_scale must be a finite number >= 0");
    }
    require_weight(lambda_U, "lambda_U");
    require_weight(lambda_V, "lambda_V");
    require_weights(user_source_default, "user_source");
    require_weights(item_source_default, "item_source");
    for (const auto& [n, w] : user_source_overrides) {
        require_weights(w, "user_source[" + std::to_string(n) + "]");
    }
    for (const auto& [m, w] : item_source_overrides) {
        require_weights(w, "item_source[" + std::to_string(m) + "]");
    }
}

}  // namespace dpmf
