#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cns/errors.hpp"
#include "cns/subject_matcher.hpp"
#include "cns/transport.hpp"

namespace cns {

struct LoopbackAdapterStats {
    std::uint64_t delivered = 0;
    std::uint64_t dropped_on_close = 0;
};

/// In-memory transport hub with the same subject semantics as the wire
/// adapter. Every adapter connected to one hub shares a single delivery
/// thread, which gives global FIFO dispatch and therefore per-subscription
/// ordering. Used for hermetic tests and the bench harness --loopback mode.
class LoopbackHub : public std::enable_shared_from_this<LoopbackHub> {
public:
    static std::shared_ptr<LoopbackHub> create() {
        auto hub = std::shared_ptr<LoopbackHub>(new LoopbackHub());
        hub->deliverer_ = std::thread([hub] { hub->delivery_loop(); });
        return hub;
    }

    ~LoopbackHub() {
        {
            std::lock_guard lock(mutex_);
            shutting_down_ = true;
        }
        queue_cv_.notify_all();
        if (deliverer_.joinable()) {
            deliverer_.join();
        }
    }

    std::unique_ptr<TransportAdapter> connect(std::string client_name);

    /// Total envelopes handed to the hub since creation.
    std::uint64_t published_count() const {
        std::lock_guard lock(mutex_);
        return enqueued_;
    }

private:
    friend class LoopbackAdapter;

    struct AdapterState {
        std::string name;
        std::atomic<bool> open{true};
        std::atomic<std::uint64_t> delivered{0};
        std::atomic<std::uint64_t> dropped_on_close{0};
    };

    struct SubEntry {
        SubscriptionPattern pattern;
        EnvelopeSink sink;
        std::shared_ptr<AdapterState> owner;
    };

    struct Delivery {
        std::uint64_t sid;
        WireEnvelope envelope;
        std::uint64_t seq;
    };

    LoopbackHub() = default;

    void enqueue(const WireEnvelope& envelope) {
        std::vector<std::uint64_t> matched;
        {
            std::lock_guard lock(mutex_);
            for (const auto& [sid, sub] : subscriptions_) {
                if (sub.pattern.matches(envelope.subject)) {
                    matched.push_back(sid);
                }
            }
            for (std::uint64_t sid : matched) {
                ++enqueued_;
                deliveries_.push_back(Delivery{sid, envelope, enqueued_});
            }
            if (matched.empty()) {
                return;
            }
        }
        queue_cv_.notify_all();
    }

    TransportSubscription add_subscription(const std::shared_ptr<AdapterState>& owner,
                                           const std::string& pattern, EnvelopeSink sink) {
        auto compiled = SubscriptionPattern::compile(pattern);
        std::lock_guard lock(mutex_);
        std::uint64_t sid = next_sid_++;
        subscriptions_.emplace(sid, SubEntry{std::move(compiled), std::move(sink), owner});
        return TransportSubscription{sid};
    }

    void remove_subscription(std::uint64_t sid) {
        std::lock_guard lock(mutex_);
        subscriptions_.erase(sid);
    }

    void remove_all_for(const std::shared_ptr<AdapterState>& owner) {
        std::lock_guard lock(mutex_);
        for (auto it = subscriptions_.begin(); it != subscriptions_.end();) {
            if (it->second.owner == owner) {
                it = subscriptions_.erase(it);
            } else {
                ++it;
            }
        }
    }

    /// Wait until everything enqueued before the call has been dispatched.
    bool wait_settled(std::chrono::nanoseconds timeout) {
        std::unique_lock lock(mutex_);
        std::uint64_t watermark = enqueued_;
        return settled_cv_.wait_for(lock, timeout, [&] { return processed_ >= watermark; });
    }

    void delivery_loop() {
        while (true) {
            Delivery item;
            EnvelopeSink sink;
            std::shared_ptr<AdapterState> owner;
            {
                std::unique_lock lock(mutex_);
                queue_cv_.wait(lock, [&] { return shutting_down_ || !deliveries_.empty(); });
                if (deliveries_.empty()) {
                    return; // shutting down and drained
                }
                item = std::move(deliveries_.front());
                deliveries_.pop_front();
                auto it = subscriptions_.find(item.sid);
                if (it != subscriptions_.end()) {
                    sink = it->second.sink;
                    owner = it->second.owner;
                }
            }
            if (sink) {
                sink(item.envelope);
                owner->delivered.fetch_add(1, std::memory_order_relaxed);
            }
            {
                std::lock_guard lock(mutex_);
                processed_ = item.seq > processed_ ? item.seq : processed_;
            }
            settled_cv_.notify_all();
        }
    }

    void close_adapter(const std::shared_ptr<AdapterState>& owner) {
        // Entries still queued for an adapter that closes abruptly are
        // counted as dropped, in the same critical section that removes the
        // subscriptions, so stop-series accounting places every message in
        // exactly one bucket.
        std::lock_guard lock(mutex_);
        for (auto& d : deliveries_) {
            auto it = subscriptions_.find(d.sid);
            if (it != subscriptions_.end() && it->second.owner == owner) {
                owner->dropped_on_close.fetch_add(1, std::memory_order_relaxed);
            }
        }
        for (auto it = subscriptions_.begin(); it != subscriptions_.end();) {
            if (it->second.owner == owner) {
                it = subscriptions_.erase(it);
            } else {
                ++it;
            }
        }
    }

    mutable std::mutex mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable settled_cv_;
    std::deque<Delivery> deliveries_;
    std::map<std::uint64_t, SubEntry> subscriptions_;
    std::uint64_t next_sid_ = 1;
    std::uint64_t enqueued_ = 0;
    std::uint64_t processed_ = 0;
    bool shutting_down_ = false;
    std::thread deliverer_;
};

class LoopbackAdapter final : public TransportAdapter {
public:
    LoopbackAdapter(std::shared_ptr<LoopbackHub> hub, std::string client_name)
        : hub_(std::move(hub)), state_(std::make_shared<LoopbackHub::AdapterState>()) {
        state_->name = std::move(client_name);
    }

    ~LoopbackAdapter() override { close(); }

    void publish(const WireEnvelope& envelope) override {
        if (!state_->open.load()) {
            throw NotConnectedError("loopback adapter \"" + state_->name + "\" is closed");
        }
        hub_->enqueue(envelope);
    }

    TransportSubscription subscribe(const std::string& pattern, EnvelopeSink sink) override {
        if (!state_->open.load()) {
            throw NotConnectedError("loopback adapter \"" + state_->name + "\" is closed");
        }
        return hub_->add_subscription(state_, pattern, std::move(sink));
    }

    void unsubscribe(TransportSubscription sub) override { hub_->remove_subscription(sub.sid); }

    bool flush(std::chrono::nanoseconds timeout) override { return hub_->wait_settled(timeout); }

    DrainOutcome drain_and_unsubscribe(std::chrono::nanoseconds deadline) override {
        DrainOutcome outcome;
        {
            std::lock_guard lock(hub_->mutex_);
            for (const auto& [sid, sub] : hub_->subscriptions_) {
                if (sub.owner == state_) {
                    ++outcome.subscriptions_drained;
                }
            }
        }
        outcome.timed_out = !hub_->wait_settled(deadline);
        hub_->remove_all_for(state_);
        return outcome;
    }

    void close() override {
        bool was_open = state_->open.exchange(false);
        if (was_open) {
            hub_->close_adapter(state_);
        }
    }

    bool connected() const override { return state_->open.load(); }

    std::string new_inbox() override {
        std::uint64_t n = inbox_counter_.fetch_add(1);
        return "_INBOX." + state_->name + "." + std::to_string(n);
    }

    LoopbackAdapterStats stats() const {
        return LoopbackAdapterStats{state_->delivered.load(), state_->dropped_on_close.load()};
    }

private:
    std::shared_ptr<LoopbackHub> hub_;
    std::shared_ptr<LoopbackHub::AdapterState> state_;
    std::atomic<std::uint64_t> inbox_counter_{0};
};

inline std::unique_ptr<TransportAdapter> LoopbackHub::connect(std::string client_name) {
    return std::make_unique<LoopbackAdapter>(shared_from_this(), std::move(client_name));
}

} // namespace cns
