#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "dpmf/objective.hpp"
#include "dpmf/trainer.hpp"

namespace dpmf {

/// The link between the master and one slave, named after the slave.
struct LinkId {
    SourceKind kind = SourceKind::User;
    std::uint32_t index = 0;

    friend auto operator<=>(const LinkId&, const LinkId&) = default;
};

std::string to_string(LinkId link);

enum class Direction : std::uint8_t { LatentDown, PartialUp, LocalLossUp };

std::string_view to_string(Direction direction);

/// One protocol message. Vector payloads are latent or partial-gradient
/// columns keyed by entity; LocalLossUp carries a single scalar.
struct GradientMessage {
    static constexpr std::size_t kBytesPerReal = 8;
    static constexpr std::size_t kBytesPerKey = 8;

    Direction direction = Direction::LatentDown;
    LinkId link;
    std::size_t iteration = 0;
    std::size_t k = 0;
    std::vector<EntityId> keys;
    std::vector<double> vectors;  // keys.size() * k, column after column
    double scalar = 0.0;

    /// count * k * 8 + count * 8 for vector payloads, 8 for a scalar.
    std::size_t byte_size() const;

    std::span<const double> vector(std::size_t i) const { return {vectors.data() + i * k, k}; }
};

/// Byte counts per (iteration, link, direction).
class TrafficLedger {
public:
    struct Row {
        std::size_t iteration;
        LinkId link;
        Direction direction;
        std::uint64_t bytes;
        std::size_t messages;

        friend bool operator==(const Row&, const Row&) = default;
    };

    void record(const GradientMessage& message);

    std::uint64_t total_bytes() const { return total_bytes_; }
    std::uint64_t bytes(Direction direction) const;
    std::uint64_t bytes_in_iteration(std::size_t iteration) const;
    std::size_t message_count() const { return message_count_; }

    /// Sorted by (iteration, link, direction), independent of send order.
    std::vector<Row> rows() const;

    /// Lines `iteration<TAB>link<TAB>direction<TAB>bytes`.
    std::string format() const;

private:
    using Key = std::tuple<std::size_t, LinkId, Direction>;
    std::map<Key, std::pair<std::uint64_t, std::size_t>> cells_;
    std::uint64_t total_bytes_ = 0;
    std::size_t message_count_ = 0;
};

/// In-process transport with per-link FIFO delivery. Every send is charged
/// to the ledger. Safe to use from concurrently running slaves.
class MessageBus {
public:
    void send(GradientMessage message);
    std::optional<GradientMessage> receive(LinkId link, Direction direction);

    /// Observed copy of every delivered message, for inspection in tests.
    void set_tap(std::function<void(const GradientMessage&)> tap);

    const TrafficLedger& ledger() const { return ledger_; }
    TrafficLedger take_ledger();

private:
    mutable std::mutex mutex_;
    std::map<std::pair<LinkId, Direction>, std::deque<GradientMessage>> queues_;
    TrafficLedger ledger_;
    std::function<void(const GradientMessage&)> tap_;
};

/// Cluster holding the rating matrix and the global U, V.
class MasterNode {
public:
    MasterNode(RatingDataset ratings, const Hyperparams& hyper);

    /// Setup handshake: the slave advertises its entity labels, the master
    /// answers with the ids both sides know, in global order. Not metered.
    std::vector<EntityId> register_slave(LinkId link, const LabelIndex& advertised);

    /// Computes the local gradient terms and sends each registered slave the
    /// latent vectors of the entities it shares.
    void begin_round(MessageBus& bus, std::size_t iteration, const Hyperparams& hyper);

    struct RoundOutcome {
        double loss;
        double max_update;
    };

    /// Collects every slave's partial gradient and local loss, merges them in
    /// ascending link order, and steps U and V. Throws MissingSlaveReply if a
    /// registered slave did not answer this iteration.
    RoundOutcome finish_round(MessageBus& bus, std::size_t iteration, const Hyperparams& hyper);

    const RatingDataset& ratings() const { return ratings_; }
    const FactorMatrix& users() const { return users_; }
    const FactorMatrix& items() const { return items_; }

    /// Every sparse matrix reachable from this node.
    std::vector<const SparseMatrix*> held_matrices() const { return {&ratings_.ratings}; }

    std::size_t link_count() const { return links_.size(); }
    std::span<const EntityId> shared_with(LinkId link) const;

private:
    struct Link {
        LinkId id;
        std::vector<std::size_t> shared;  // global columns, ascending
        std::vector<EntityId> shared_ids;
        LabelIndex shared_index;
    };

    const Link& link(LinkId id) const;

    RatingDataset ratings_;
    FactorMatrix users_;
    FactorMatrix items_;
    std::map<LinkId, Link> links_;
    std::optional<RatingTerms> pending_;
};

/// Cluster holding one source matrix and its local factors.
class SlaveNode {
public:
    SlaveNode(SourceMatrix source, const Hyperparams& hyper);

    LinkId link() const { return {source_.kind, source_.index}; }
    const LabelIndex& advertised_labels() const { return source_.data.row_labels(); }

    /// Installs the shared-entity table returned by the master.
    void attach(std::span<const EntityId> shared_ids);

    /// One protocol step: overwrite shared columns with the received latents,
    /// send the partial gradient and the local loss, then step the private
    /// entity columns and the attribute factors. Returns max |update|.
    double iterate(MessageBus& bus, std::size_t iteration, const Hyperparams& hyper);

    const SourceMatrix& source() const { return source_; }
    const SourceFactors& factors() const { return factors_; }
    const AlignmentReport& alignment() const { return alignment_; }

    std::vector<const SparseMatrix*> held_matrices() const { return {&source_.data}; }

private:
    double lambda_entity(const Hyperparams& hyper) const;
    SourceWeights weights(const Hyperparams& hyper) const;

    SourceMatrix source_;
    SourceFactors factors_;
    AlignmentReport alignment_;
};

enum class SlaveSchedule { Ascending, Descending, Concurrent };

/// Master plus one slave per source, wired through a bus.
class Cluster {
public:
    Cluster(const Problem& problem, const Hyperparams& hyper);

    MasterNode& master() { return master_; }
    const MasterNode& master() const { return master_; }
    std::span<SlaveNode> user_slaves() { return user_slaves_; }
    std::span<const SlaveNode> user_slaves() const { return user_slaves_; }
    std::span<SlaveNode> item_slaves() { return item_slaves_; }
    std::span<const SlaveNode> item_slaves() const { return item_slaves_; }
    MessageBus& bus() { return bus_; }
    const MessageBus& bus() const { return bus_; }

    /// Runs the slaves of one iteration in the given order.
    double run_slaves(std::size_t iteration, const Hyperparams& hyper, SlaveSchedule schedule);

    /// Master's U, V plus every slave's factors, shared columns synced.
    ModelState assemble(const Problem& problem) const;

private:
    MasterNode master_;
    std::vector<SlaveNode> user_slaves_;
    std::vector<SlaveNode> item_slaves_;
    MessageBus bus_;
};

/// One full protocol round; returns the aggregated loss and max update.
MasterNode::RoundOutcome master_iteration(Cluster& cluster, std::size_t iteration, const Hyperparams& hyper,
                                          SlaveSchedule schedule = SlaveSchedule::Ascending);

struct DistributedOptions {
    SlaveSchedule schedule = SlaveSchedule::Ascending;
    /// Called after every round with the cluster in its post-round state.
    std::function<void(const Cluster&, std::size_t iteration)> observer;
};

struct DistributedResult {
    ModelState state;
    TrainTrace trace;
    TrafficLedger ledger;
};

/// Iterates master/slave rounds under the same stopping rule as the
/// centralized trainer.
DistributedResult run_distributed(const Problem& problem, const Hyperparams& hyper,
                                  const DistributedOptions& options = {});

}  // namespace dpmf
