#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dpmf {

enum class Space : std::uint8_t { User, Item, UserAttribute, ItemAttribute };

std::string_view to_string(Space space);

// Attribute spaces are scoped by the index of the source that owns them;
// users and items are global and always carry source 0.
struct Namespace {
    Space space = Space::User;
    std::uint32_t source = 0;

    static Namespace user() { return {Space::User, 0}; }
    static Namespace item() { return {Space::Item, 0}; }
    static Namespace user_attribute(std::uint32_t n) { return {Space::UserAttribute, n}; }
    static Namespace item_attribute(std::uint32_t m) { return {Space::ItemAttribute, m}; }

    bool is_attribute() const { return space == Space::UserAttribute || space == Space::ItemAttribute; }

    friend auto operator<=>(const Namespace&, const Namespace&) = default;
};

std::string to_string(const Namespace& ns);

/// Identity of a user, item or attribute. Equality is exact byte equality
/// of namespace and key; there is no normalization.
struct EntityId {
    Namespace ns;
    std::string key;

    friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

std::string to_string(const EntityId& id);

struct EntityIdHash {
    std::size_t operator()(const EntityId& id) const noexcept;
};

/// Ordered, duplicate-free list of entity labels with O(1) lookup.
class LabelIndex {
public:
    LabelIndex() = default;

    /// Throws DuplicateLabel if the same id appears twice.
    explicit LabelIndex(std::vector<EntityId> labels);

    /// Returns the position of `id`, appending it if absent.
    std::size_t add(const EntityId& id);

    std::optional<std::size_t> find(const EntityId& id) const;
    bool contains(const EntityId& id) const { return find(id).has_value(); }

    const EntityId& at(std::size_t index) const { return labels_.at(index); }
    const EntityId& operator[](std::size_t index) const { return labels_[index]; }
    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    std::span<const EntityId> labels() const { return labels_; }

    friend bool operator==(const LabelIndex& a, const LabelIndex& b) { return a.labels_ == b.labels_; }

private:
    std::vector<EntityId> labels_;
    std::unordered_map<EntityId, std::size_t, EntityIdHash> positions_;
};

}  // namespace dpmf
