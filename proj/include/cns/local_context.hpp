#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cns/bounded_queue.hpp"
#include "cns/errors.hpp"
#include "cns/event.hpp"
#include "cns/logging.hpp"
#include "cns/subject_matcher.hpp"

namespace cns {

using EventHandler = std::function<void(const Event&)>;

struct LocalContextConfig {
    std::size_t publish_queue_capacity = 1024;
    std::size_t subscription_queue_capacity = 1024;
    OverflowPolicy publish_queue_policy = OverflowPolicy::Reject;
    OverflowPolicy subscription_queue_policy = OverflowPolicy::Reject;
};

struct DeliverySummary {
    std::size_t handlers_invoked = 0;
    std::size_t enqueued = 0;
    std::size_t dropped_queue_full = 0;
};

enum class ExportResult { Accepted, RejectedFull, RejectedClosed };

struct SubscriptionHandle {
    std::uint64_t id = 0;
    bool operator==(const SubscriptionHandle&) const = default;
};

/// In-process publish/subscribe context with two bounded queues: a publish
/// queue holding events awaiting bridge export and a subscription queue fed
/// by handler-less subscriptions. Handlers run synchronously on the
/// publishing thread; queue-mode subscribers poll.
///
/// All operations are safe under concurrent callers. A publication observes
/// either the pre- or post-mutation subscription set, never a partial one.
class PubSubContext {
public:
    explicit PubSubContext(LocalContextConfig config = {})
        : config_(config),
          publish_queue_(config.publish_queue_capacity, config.publish_queue_policy),
          subscription_queue_(config.subscription_queue_capacity,
                              config.subscription_queue_policy) {}

    /// Dispatch to every matching subscription: handler subscriptions are
    /// invoked synchronously, handler-less ones enqueue one copy each.
    /// Handler exceptions are caught, counted and logged so one subscriber
    /// cannot poison the publish path.
    DeliverySummary publish_local(const Event& event) { return publish_impl(event, nullptr); }

    /// Rvalue form: the final queue delivery takes the event by move.
    DeliverySummary publish_local(Event&& event) { return publish_impl(event, &event); }

    /// Append to the publish queue for the bridge to export. Under the Block
    /// policy the caller waits for space; RejectedClosed is returned once the
    /// intake has been closed for a draining stop.
    ExportResult publish_for_export(Event event) {
        switch (publish_queue_.push(std::move(event))) {
        case PushResult::Accepted:
            return ExportResult::Accepted;
        case PushResult::Full:
            return ExportResult::RejectedFull;
        case PushResult::Closed:
        default:
            return ExportResult::RejectedClosed;
        }
    }

    /// A null handler selects queue mode: matched events become pollable.
    SubscriptionHandle subscribe(const std::string& pattern, EventHandler handler = nullptr) {
        auto sub = std::make_shared<Subscription>(
            Subscription{SubscriptionPattern::compile(pattern), std::move(handler)});
        std::lock_guard lock(subscriptions_mutex_);
        SubscriptionHandle handle{next_subscription_id_++};
        subscriptions_.emplace(handle.id, std::move(sub));
        return handle;
    }

    void unsubscribe(SubscriptionHandle handle) {
        std::lock_guard lock(subscriptions_mutex_);
        if (subscriptions_.erase(handle.id) == 0) {
            throw UnknownHandleError("unknown subscription handle " + std::to_string(handle.id));
        }
    }

    /// Oldest queued event, or nullopt once the timeout elapses.
    std::optional<Event> poll(std::chrono::nanoseconds timeout) {
        return subscription_queue_.pop(timeout);
    }

    /// Bridge side of the publish queue.
    std::optional<Event> poll_export(std::chrono::nanoseconds timeout) {
        return publish_queue_.pop(timeout);
    }

    /// Stop accepting publish_for_export; queued events remain pollable.
    void close_export_intake() { publish_queue_.close(); }

    std::size_t export_queue_depth() const { return publish_queue_.size(); }
    std::uint64_t export_accepted_total() const { return publish_queue_.pushed_total(); }
    std::size_t subscription_queue_depth() const { return subscription_queue_.size(); }
    std::uint64_t handler_error_count() const {
        return handler_errors_.load(std::memory_order_relaxed);
    }
    std::size_t subscription_count() const {
        std::lock_guard lock(subscriptions_mutex_);
        return subscriptions_.size();
    }
    const LocalContextConfig& config() const { return config_; }

private:
    struct Subscription {
        SubscriptionPattern pattern;
        EventHandler handler;
    };

    DeliverySummary publish_impl(const Event& event, Event* movable) {
        std::vector<std::shared_ptr<const Subscription>> matched;
        {
            std::lock_guard lock(subscriptions_mutex_);
            for (const auto& [id, sub] : subscriptions_) {
                if (sub->pattern.matches(event.key.full_key())) {
                    matched.push_back(sub);
                }
            }
        }
        DeliverySummary summary;
        std::size_t queue_deliveries = 0;
        // Handlers run first so the move below cannot touch an event a
        // handler still needs.
        for (const auto& sub : matched) {
            if (!sub->handler) {
                ++queue_deliveries;
                continue;
            }
            try {
                sub->handler(event);
            } catch (const std::exception& e) {
                handler_errors_.fetch_add(1, std::memory_order_relaxed);
                logging::warn("handler for pattern \"" + sub->pattern.text() +
                              "\" threw: " + e.what());
                continue;
            } catch (...) {
                handler_errors_.fetch_add(1, std::memory_order_relaxed);
                logging::warn("handler for pattern \"" + sub->pattern.text() +
                              "\" threw a non-exception value");
                continue;
            }
            ++summary.handlers_invoked;
        }
        std::size_t queue_seen = 0;
        for (const auto& sub : matched) {
            if (sub->handler) {
                continue;
            }
            ++queue_seen;
            PushResult result = (movable && queue_seen == queue_deliveries)
                                    ? subscription_queue_.push(std::move(*movable))
                                    : subscription_queue_.push(event);
            switch (result) {
            case PushResult::Accepted:
                ++summary.enqueued;
                break;
            case PushResult::Full:
            case PushResult::Closed:
                ++summary.dropped_queue_full;
                break;
            }
        }
        return summary;
    }

    LocalContextConfig config_;
    BoundedQueue<Event> publish_queue_;
    BoundedQueue<Event> subscription_queue_;
    mutable std::mutex subscriptions_mutex_;
    std::map<std::uint64_t, std::shared_ptr<const Subscription>> subscriptions_;
    std::uint64_t next_subscription_id_ = 1;
    std::atomic<std::uint64_t> handler_errors_{0};
};

} // namespace cns
