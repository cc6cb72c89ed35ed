#include "dpmf/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "dpmf/errors.hpp"

namespace dpmf {

namespace {

GradientMessage vector_message(Direction direction, LinkId link, std::size_t iteration, const FactorMatrix& columns) {
    GradientMessage msg;
    msg.direction = direction;
    msg.link = link;
    msg.iteration = iteration;
    msg.k = columns.k();
    msg.keys.assign(columns.labels().labels().begin(), columns.labels().labels().end());
    msg.vectors.assign(columns.values().begin(), columns.values().end());
    return msg;
}

double step(std::span<double> values, std::span<const double> grad, double alpha) {
    double max_update = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double delta = alpha * grad[i];
        values[i] -= delta;
        if (std::isnan(delta) || std::isnan(max_update)) {
            max_update = std::nan("");
        } else {
            max_update = std::max(max_update, std::abs(delta));
        }
    }
    return max_update;
}

double merge_max(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) {
        return std::nan("");
    }
    return std::max(a, b);
}

}  // namespace

std::string to_string(LinkId link) {
    return std::string(to_string(link.kind)) + ":" + std::to_string(link.index);
}

std::string_view to_string(Direction direction) {
    switch (direction) {
        case Direction::LatentDown: return "latent-down";
        case Direction::PartialUp: return "partial-up";
        case Direction::LocalLossUp: return "local-loss-up";
    }
    return "unknown";
}

std::size_t GradientMessage::byte_size() const {
    if (direction == Direction::LocalLossUp) {
        return kBytesPerReal;
    }
    return keys.size() * k * kBytesPerReal + keys.size() * kBytesPerKey;
}

// --- ledger -----------------------------------------------------------------

void TrafficLedger::record(const GradientMessage& message) {
    const std::uint64_t bytes = message.byte_size();
    auto& cell = cells_[Key{message.iteration, message.link, message.direction}];
    cell.first += bytes;
    cell.second += 1;
    total_bytes_ += bytes;
    message_count_ += 1;
}

std::uint64_t TrafficLedger::bytes(Direction direction) const {
    std::uint64_t sum = 0;
    for (const auto& [key, cell] : cells_) {
        if (std::get<2>(key) == direction) {
            sum += cell.first;
        }
    }
    return sum;
}

std::uint64_t TrafficLedger::bytes_in_iteration(std::size_t iteration) const {
    std::uint64_t sum = 0;
    for (const auto& [key, cell] : cells_) {
        if (std::get<0>(key) == iteration) {
            sum += cell.first;
        }
    }
    return sum;
}

std::vector<TrafficLedger::Row> TrafficLedger::rows() const {
    std::vector<Row> out;
    out.reserve(cells_.size());
    for (const auto& [key, cell] : cells_) {
        out.push_back(Row{std::get<0>(key), std::get<1>(key), std::get<2>(key), cell.first, cell.second});
    }
    return out;
}

std::string TrafficLedger::format() const {
    std::string out;
    for (const Row& row : rows()) {
        out += std::to_string(row.iteration) + '\t' + to_string(row.link) + '\t' + std::string(to_string(row.direction)) +
               '\t' + std::to_string(row.bytes) + '\n';
    }
    return out;
}

// --- bus --------------------------------------------------------------------

void MessageBus::send(GradientMessage message) {
    std::lock_guard lock(mutex_);
    ledger_.record(message);
    if (tap_) {
        tap_(message);
    }
    queues_[{message.link, message.direction}].push_back(std::move(message));
}

std::optional<GradientMessage> MessageBus::receive(LinkId link, Direction direction) {
    std::lock_guard lock(mutex_);
    auto it = queues_.find({link, direction});
    if (it == queues_.end() || it->second.empty()) {
        return std::nullopt;
    }
    GradientMessage msg = std::move(it->second.front());
    it->second.pop_front();
    return msg;
}

void MessageBus::set_tap(std::function<void(const GradientMessage&)> tap) {
    std::lock_guard lock(mutex_);
    tap_ = std::move(tap);
}

TrafficLedger MessageBus::take_ledger() {
    std::lock_guard lock(mutex_);
    return std::exchange(ledger_, TrafficLedger{});
}

// --- master -----------------------------------------------------------------

MasterNode::MasterNode(RatingDataset ratings, const Hyperparams& hyper)
    : ratings_(std::move(ratings)),
      users_(init_global_users(ratings_.ratings, hyper)),
      items_(init_global_items(ratings_.ratings, hyper)) {}

std::vector<EntityId> MasterNode::register_slave(LinkId id, const LabelIndex& advertised) {
    const FactorMatrix& global = id.kind == SourceKind::User ? users_ : items_;
    AlignmentReport report = align_labels(advertised, global.labels());
    Link link;
    link.id = id;
    for (const SharedEntity& e : report.shared) {
        link.shared.push_back(e.global);
        link.shared_ids.push_back(global.labels()[e.global]);
    }
    link.shared_index = LabelIndex(link.shared_ids);
    auto ids = link.shared_ids;
    links_[id] = std::move(link);
    return ids;
}

const MasterNode::Link& MasterNode::link(LinkId id) const {
    auto it = links_.find(id);
    if (it == links_.end()) {
        throw InvalidArgument("no slave registered on link " + to_string(id));
    }
    return it->second;
}

std::span<const EntityId> MasterNode::shared_with(LinkId id) const {
    return link(id).shared_ids;
}

void MasterNode::begin_round(MessageBus& bus, std::size_t iteration, const Hyperparams& hyper) {
    pending_ = rating_terms(ratings_.ratings, users_, items_, hyper);
    for (const auto& [id, link] : links_) {
        const FactorMatrix& global = id.kind == SourceKind::User ? users_ : items_;
        GradientMessage msg;
        msg.direction = Direction::LatentDown;
        msg.link = id;
        msg.iteration = iteration;
        msg.k = global.k();
        msg.keys = link.shared_ids;
        msg.vectors.reserve(link.shared.size() * global.k());
        for (std::size_t g : link.shared) {
            auto v = global.col(g);
            msg.vectors.insert(msg.vectors.end(), v.begin(), v.end());
        }
        bus.send(std::move(msg));
    }
}

MasterNode::RoundOutcome MasterNode::finish_round(MessageBus& bus, std::size_t iteration, const Hyperparams& hyper) {
    if (!pending_) {
        throw InvalidArgument("finish_round called without begin_round");
    }
    RatingTerms terms = std::move(*pending_);
    pending_.reset();

    auto await = [&](LinkId id, Direction direction) {
        auto msg = bus.receive(id, direction);
        if (!msg || msg->iteration != iteration) {
            throw MissingSlaveReply("slave " + to_string(id) + " sent no " + std::string(to_string(direction)) +
                                    " for iteration " + std::to_string(iteration));
        }
        return std::move(*msg);
    };

    // links_ is ordered user links first, each side by ascending index:
    // the canonical merge order
    double total = terms.local_loss();
    for (const auto& [id, link] : links_) {
        GradientMessage partial = await(id, Direction::PartialUp);
        for (const EntityId& key : partial.keys) {
            if (!link.shared_index.contains(key)) {
                throw UnknownEntityInMessage("slave " + to_string(id) + " sent a partial gradient for unshared entity " +
                                             to_string(key));
            }
        }
        FactorMatrix& grad = id.kind == SourceKind::User ? terms.grad_users : terms.grad_items;
        FactorMatrix columns(partial.k, std::make_shared<LabelIndex>(std::move(partial.keys)), std::move(partial.vectors));
        oplus_into(grad, columns);
        total += await(id, Direction::LocalLossUp).scalar;
    }

    if (!std::isfinite(total)) {
        return {total, 0.0};
    }
    double max_update = step(users_.values(), terms.grad_users.values(), hyper.alpha);
    max_update = merge_max(max_update, step(items_.values(), terms.grad_items.values(), hyper.alpha));
    return {total, max_update};
}

// --- slave ------------------------------------------------------------------

SlaveNode::SlaveNode(SourceMatrix source, const Hyperparams& hyper)
    : source_(std::move(source)), factors_(init_source_factors(source_, hyper)) {
    alignment_.is_shared.assign(source_.data.n_rows(), false);
}

void SlaveNode::attach(std::span<const EntityId> shared_ids) {
    AlignmentReport report;
    report.is_shared.assign(source_.data.n_rows(), false);
    for (std::size_t i = 0; i < shared_ids.size(); ++i) {
        auto local = source_.data.row_labels().find(shared_ids[i]);
        if (!local) {
            throw UnknownEntity("master reported " + to_string(shared_ids[i]) + " as shared with " + to_string(link()) +
                                ", which does not hold it");
        }
        report.shared.push_back(SharedEntity{*local, i});
        report.is_shared[*local] = true;
    }
    alignment_ = std::move(report);
}

double SlaveNode::lambda_entity(const Hyperparams& hyper) const {
    return source_.kind == SourceKind::User ? hyper.lambda_U : hyper.lambda_V;
}

SourceWeights SlaveNode::weights(const Hyperparams& hyper) const {
    return source_.kind == SourceKind::User ? hyper.user_source(source_.index) : hyper.item_source(source_.index);
}

double SlaveNode::iterate(MessageBus& bus, std::size_t iteration, const Hyperparams& hyper) {
    auto latents = bus.receive(link(), Direction::LatentDown);
    if (!latents || latents->iteration != iteration) {
        throw MissingSlaveReply("slave " + to_string(link()) + " received no latent vectors for iteration " +
                                std::to_string(iteration));
    }
    for (std::size_t i = 0; i < latents->keys.size(); ++i) {
        auto local = source_.data.row_labels().find(latents->keys[i]);
        if (!local || !alignment_.is_shared[*local]) {
            throw UnknownEntityInMessage("slave " + to_string(link()) + " received unknown entity " +
                                         to_string(latents->keys[i]));
        }
        if (latents->k != factors_.entities.k()) {
            throw RowCountMismatch("latent vector dimension does not match the slave's factors");
        }
        std::ranges::copy(latents->vector(i), factors_.entities.col(*local).begin());
    }

    SourceTerms terms = source_terms(source_.data, alignment_, factors_.entities, factors_.attributes,
                                     lambda_entity(hyper), weights(hyper));

    bus.send(vector_message(Direction::PartialUp, link(), iteration, terms.partial));
    GradientMessage loss_msg;
    loss_msg.direction = Direction::LocalLossUp;
    loss_msg.link = link();
    loss_msg.iteration = iteration;
    loss_msg.scalar = terms.local_loss();
    bus.send(std::move(loss_msg));

    // shared columns carry a zero gradient; the next LatentDown overwrites them
    double max_update = step(factors_.entities.values(), terms.grad_entities.values(), hyper.alpha);
    max_update = merge_max(max_update, step(factors_.attributes.values(), terms.grad_attributes.values(), hyper.alpha));
    return max_update;
}

// --- cluster ----------------------------------------------------------------

Cluster::Cluster(const Problem& problem, const Hyperparams& hyper) : master_(problem.ratings(), hyper) {
    for (const auto& s : problem.user_sources()) {
        user_slaves_.emplace_back(s.source, hyper);
    }
    for (const auto& s : problem.item_sources()) {
        item_slaves_.emplace_back(s.source, hyper);
    }
    for (auto* slaves : {&user_slaves_, &item_slaves_}) {
        for (SlaveNode& slave : *slaves) {
            slave.attach(master_.register_slave(slave.link(), slave.advertised_labels()));
        }
    }
}

double Cluster::run_slaves(std::size_t iteration, const Hyperparams& hyper, SlaveSchedule schedule) {
    std::vector<SlaveNode*> order;
    for (SlaveNode& s : user_slaves_) {
        order.push_back(&s);
    }
    for (SlaveNode& s : item_slaves_) {
        order.push_back(&s);
    }
    std::vector<double> updates(order.size(), 0.0);

    switch (schedule) {
        case SlaveSchedule::Ascending:
            for (std::size_t i = 0; i < order.size(); ++i) {
                updates[i] = order[i]->iterate(bus_, iteration, hyper);
            }
            break;
        case SlaveSchedule::Descending:
            for (std::size_t i = order.size(); i-- > 0;) {
                updates[i] = order[i]->iterate(bus_, iteration, hyper);
            }
            break;
        case SlaveSchedule::Concurrent: {
            std::vector<std::exception_ptr> errors(order.size());
            std::vector<std::thread> workers;
            workers.reserve(order.size());
            for (std::size_t i = 0; i < order.size(); ++i) {
                workers.emplace_back([&, i] {
                    try {
                        updates[i] = order[i]->iterate(bus_, iteration, hyper);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                });
            }
            for (auto& w : workers) {
                w.join();
            }
            for (auto& e : errors) {
                if (e) {
                    std::rethrow_exception(e);
                }
            }
            break;
        }
    }

    double max_update = 0.0;
    for (double u : updates) {
        max_update = merge_max(max_update, u);
    }
    return max_update;
}

ModelState Cluster::assemble(const Problem& problem) const {
    ModelState state;
    state.users = master_.users();
    state.items = master_.items();
    for (const SlaveNode& s : user_slaves_) {
        state.user_sources.push_back(s.factors());
    }
    for (const SlaveNode& s : item_slaves_) {
        state.item_sources.push_back(s.factors());
    }
    sync_shared(problem, state);
    return state;
}

MasterNode::RoundOutcome master_iteration(Cluster& cluster, std::size_t iteration, const Hyperparams& hyper,
                                          SlaveSchedule schedule) {
    cluster.master().begin_round(cluster.bus(), iteration, hyper);
    const double slave_update = cluster.run_slaves(iteration, hyper, schedule);
    MasterNode::RoundOutcome outcome = cluster.master().finish_round(cluster.bus(), iteration, hyper);
    // update sizes are run instrumentation, gathered outside the protocol
    if (std::isfinite(outcome.loss)) {
        outcome.max_update = merge_max(outcome.max_update, slave_update);
    }
    return outcome;
}

DistributedResult run_distributed(const Problem& problem, const Hyperparams& hyper, const DistributedOptions& options) {
    hyper.validate();
    Cluster cluster(problem, hyper);
    DistributedResult result;
    ConvergenceGuard guard(hyper.epsilon);
    for (std::size_t iter = 1; iter <= hyper.max_iters; ++iter) {
        MasterNode::RoundOutcome outcome = master_iteration(cluster, iter, hyper, options.schedule);
        if (options.observer) {
            options.observer(cluster, iter);
        }
        if (auto reason = guard.observe(result.trace, iter, outcome.loss, outcome.max_update)) {
            result.trace.reason = *reason;
            break;
        }
    }
    result.state = cluster.assemble(problem);
    result.ledger = cluster.bus().take_ledger();
    return result;
}

}  // namespace dpmf
