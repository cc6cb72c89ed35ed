#include "dpmf/entity.hpp"

#include <functional>

#include "dpmf/errors.hpp"

namespace dpmf {

std::string_view to_string(Space space) {
    switch (space) {
        case Space::User: return "user";
        case Space::Item: return "item";
        case Space::UserAttribute: return "user-attribute";
        case Space::ItemAttribute: return "item-attribute";
    }
    return "unknown";
}

std::string to_string(const Namespace& ns) {
    std::string out(to_string(ns.space));
    if (ns.is_attribute()) {
        out += "(" + std::to_string(ns.source) + ")";
    }
    return out;
}

std::string to_string(const EntityId& id) {
    return to_string(id.ns) + ":" + id.key;
}

std::size_t EntityIdHash::operator()(const EntityId& id) const noexcept {
    std::size_t h = std::hash<std::string>{}(id.key);
    std::size_t tag = (static_cast<std::size_t>(id.ns.space) << 32) ^ id.ns.source;
    return h ^ (tag + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

LabelIndex::LabelIndex(std::vector<EntityId> labels) {
    positions_.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!positions_.emplace(labels[i], i).second) {
            throw DuplicateLabel("duplicate label " + to_string(labels[i]));
        }
    }
    labels_ = std::move(labels);
}

std::size_t LabelIndex::add(const EntityId& id) {
    auto [it, inserted] = positions_.emplace(id, labels_.size());
    if (inserted) {
        labels_.push_back(id);
    }
    return it->second;
}

std::optional<std::size_t> LabelIndex::find(const EntityId& id) const {
    auto it = positions_.find(id);
    if (it == positions_.end()) {
        return std::nullopt;
    }
    return it->second;
}

}  // namespace dpmf
