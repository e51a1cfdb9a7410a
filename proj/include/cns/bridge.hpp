#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cns/bounded_queue.hpp"
#include "cns/clock.hpp"
#include "cns/distributed_context.hpp"
#include "cns/errors.hpp"
#include "cns/event.hpp"
#include "cns/local_context.hpp"
#include "cns/subject_matcher.hpp"

namespace cns {

enum class StopMode { Abrupt, Drain };

inline const char* to_string(StopMode mode) {
    return mode == StopMode::Abrupt ? "abrupt" : "drain";
}

/// Metadata entry stamped on localized events. The export loop skips events
/// whose bridged identity equals its own, which breaks re-export cycles when
/// export and import patterns overlap.
inline constexpr const char* kBridgedMetaKey = "cns.bridged";

struct BridgeConfig {
    std::vector<std::string> export_patterns;
    std::vector<std::string> import_patterns;
    StopMode stop_mode = StopMode::Drain;
    std::chrono::nanoseconds drain_deadline = std::chrono::seconds(5);
    std::chrono::nanoseconds loop_idle_wait = std::chrono::milliseconds(1);
    std::size_t handoff_capacity = 4096;
};

struct BridgeStats {
    std::uint64_t exported = 0;
    std::uint64_t imported = 0;
    std::uint64_t export_failures = 0;
    std::uint64_t import_rejections = 0;  // local QueueFull drops, per copy
    std::uint64_t handoff_rejections = 0; // inbound events the handoff refused
    std::uint64_t filtered = 0;           // polled but matched no export pattern
    std::uint64_t skipped_reimport = 0;   // loop-prevention guard hits
    std::int64_t stopped_at_ns = 0;       // 0 while running
    bool drained_cleanly = false;
};

struct BridgeStopReport {
    StopMode mode = StopMode::Drain;
    std::size_t backlog_at_stop = 0;
    std::size_t delivered_after_stop = 0;
    std::size_t lost_estimate = 0;
    std::chrono::nanoseconds elapsed{0};
    bool drained_cleanly = false;
    bool timed_out = false;
    bool was_noop = false;
};

/// The hybrid core: an export loop moving events from the local publish
/// queue to the distributed publisher, and an import loop localizing
/// consumed distributed events back into the local context. Lifecycle is
/// explicit: start() spins the loops, stop() ends them in abrupt or drain
/// mode and reports what happened to the backlog.
class Bridge {
public:
    Bridge(PubSubContext& local, DistributedContext& distributed, BridgeConfig config)
        : local_(local), distributed_(distributed), config_(std::move(config)),
          shared_(std::make_shared<SharedState>(config_.handoff_capacity)) {
        if (config_.drain_deadline <= std::chrono::nanoseconds(0)) {
            throw Error("drain_deadline must be positive");
        }
        for (const auto& p : config_.export_patterns) {
            export_patterns_.push_back(SubscriptionPattern::compile(p));
        }
        for (const auto& p : config_.import_patterns) {
            SubscriptionPattern::compile(p); // validated here, subscribed in start()
        }
    }

    ~Bridge() { stop(); }

    Bridge(const Bridge&) = delete;
    Bridge& operator=(const Bridge&) = delete;

    void start() {
        std::lock_guard stop_lock(stop_mutex_);
        if (started_.exchange(true)) {
            throw AlreadyStartedError("bridge already started");
        }
        if (!distributed_.connected()) {
            started_.store(false);
            throw NotConnectedError("bridge requires a connected distributed context");
        }
        active_.store(true);
        auto shared = shared_;
        for (const auto& pattern : config_.import_patterns) {
            subscriptions_.push_back(distributed_.subscribe(pattern, [shared](const Event& event) {
                // Exactly one enqueue on the delivery thread; the worker does
                // the potentially blocking local publish.
                if (shared->handoff.push(event) != PushResult::Accepted) {
                    shared->handoff_rejections.fetch_add(1, std::memory_order_relaxed);
                }
            }));
        }
        export_thread_ = std::thread([this] { export_loop(); });
        import_thread_ = std::thread([this] { import_loop(); });
    }

    bool running() const { return active_.load(); }

    BridgeStopReport stop() { return stop(config_.stop_mode); }

    BridgeStopReport stop(StopMode mode) {
        std::lock_guard stop_lock(stop_mutex_);
        if (!started_.load() || stopped_) {
            BridgeStopReport report;
            report.mode = mode;
            report.was_noop = true;
            report.drained_cleanly = true;
            return report;
        }
        stopped_ = true;

        const auto t0 = std::chrono::steady_clock::now();
        const auto deadline = t0 + config_.drain_deadline;
        shared_->stopped_at_ns.store(now_ns());

        local_.close_export_intake();

        // Backlog accounting is counter-based: accepted pushes minus disposed
        // events. This counts an event a loop has popped but not yet finished
        // processing, which a queue-depth snapshot would miss.
        const std::uint64_t exported_before = shared_->exported.load();
        const std::uint64_t imported_before = shared_->imported.load();
        const std::uint64_t export_failures_before = shared_->export_failures.load();
        const std::uint64_t filtered_before = shared_->filtered.load();
        const std::uint64_t skipped_before = shared_->skipped_reimport.load();
        const std::uint64_t export_disposed_before =
            exported_before + export_failures_before + filtered_before + skipped_before;
        const std::uint64_t export_backlog =
            local_.export_accepted_total() - export_disposed_before;
        const std::uint64_t import_backlog =
            shared_->handoff.pushed_total() - imported_before;

        BridgeStopReport report;
        report.mode = mode;
        report.backlog_at_stop = export_backlog + import_backlog;

        if (mode == StopMode::Drain) {
            // Loops keep running while the export queue empties, the
            // distributed side drains its in-flight deliveries into the
            // handoff, and the handoff empties in turn.
            report.timed_out = !wait_until_idle(
                [this] { return local_.export_queue_depth() == 0 && !export_busy_.load(); },
                deadline);
            distributed_.stop();
            if (!report.timed_out) {
                report.timed_out = !wait_until_idle(
                    [this] { return shared_->handoff.size() == 0 && !import_busy_.load(); },
                    deadline);
            }
        }

        active_.store(false);
        shared_->handoff.close();
        if (export_thread_.joinable()) {
            export_thread_.join();
        }
        if (import_thread_.joinable()) {
            import_thread_.join();
        }

        // Loops are joined: no event is in flight, so queue remnants and the
        // disposal counters are final and disjoint.
        const std::uint64_t export_remnant =
            local_.export_accepted_total() -
            (shared_->exported.load() + shared_->export_failures.load() +
             shared_->filtered.load() + shared_->skipped_reimport.load());
        const std::uint64_t import_remnant =
            shared_->handoff.pushed_total() - shared_->imported.load();
        const std::uint64_t failed_after =
            shared_->export_failures.load() - export_failures_before;
        report.delivered_after_stop = (shared_->exported.load() - exported_before) +
                                      (shared_->imported.load() - imported_before);
        report.lost_estimate = export_remnant + import_remnant + failed_after;
        report.drained_cleanly = !report.timed_out && report.lost_estimate == 0;
        report.elapsed = std::chrono::steady_clock::now() - t0;
        shared_->drained_cleanly.store(report.drained_cleanly);
        return report;
    }

    BridgeStats stats() const {
        BridgeStats out;
        out.exported = shared_->exported.load();
        out.imported = shared_->imported.load();
        out.export_failures = shared_->export_failures.load();
        out.import_rejections = shared_->import_rejections.load();
        out.handoff_rejections = shared_->handoff_rejections.load();
        out.filtered = shared_->filtered.load();
        out.skipped_reimport = shared_->skipped_reimport.load();
        out.stopped_at_ns = shared_->stopped_at_ns.load();
        out.drained_cleanly = shared_->drained_cleanly.load();
        return out;
    }

    /// Events sitting between the transport delivery thread and the local
    /// context. Exposed for stop-series accounting.
    std::size_t handoff_depth() const { return shared_->handoff.size(); }

    /// Events the handoff ever accepted; with stats().imported this gives an
    /// exact handoff remnant even while an event is mid-localization.
    std::uint64_t handoff_accepted_total() const { return shared_->handoff.pushed_total(); }

private:
    struct SharedState {
        explicit SharedState(std::size_t handoff_capacity)
            : handoff(handoff_capacity, OverflowPolicy::Reject) {}
        BoundedQueue<Event> handoff;
        std::atomic<std::uint64_t> exported{0};
        std::atomic<std::uint64_t> imported{0};
        std::atomic<std::uint64_t> export_failures{0};
        std::atomic<std::uint64_t> import_rejections{0};
        std::atomic<std::uint64_t> handoff_rejections{0};
        std::atomic<std::uint64_t> filtered{0};
        std::atomic<std::uint64_t> skipped_reimport{0};
        std::atomic<std::int64_t> stopped_at_ns{0};
        std::atomic<bool> drained_cleanly{false};
    };

    void export_loop() {
        while (active_.load(std::memory_order_relaxed)) {
            std::optional<Event> event = local_.poll_export(config_.loop_idle_wait);
            if (!event) {
                continue;
            }
            export_busy_.store(true);
            process_export(*event);
            export_busy_.store(false);
        }
    }

    void process_export(const Event& event) {
        auto bridged = event.metadata.find(kBridgedMetaKey);
        if (bridged != event.metadata.end() && bridged->second == distributed_.client_id()) {
            shared_->skipped_reimport.fetch_add(1, std::memory_order_relaxed);
            return;
        }
        bool matched = false;
        for (const auto& pattern : export_patterns_) {
            if (pattern.matches(event.key.full_key())) {
                matched = true;
                break;
            }
        }
        if (!matched) {
            shared_->filtered.fetch_add(1, std::memory_order_relaxed);
            return;
        }
        try {
            PublishOutcome outcome = distributed_.publish(event);
            if (outcome.published()) {
                shared_->exported.fetch_add(1, std::memory_order_relaxed);
            } else {
                shared_->export_failures.fetch_add(1, std::memory_order_relaxed);
            }
        } catch (const std::exception& e) {
            shared_->export_failures.fetch_add(1, std::memory_order_relaxed);
            logging::warn(std::string("bridge export failed: ") + e.what());
        }
    }

    void import_loop() {
        while (active_.load(std::memory_order_relaxed)) {
            std::optional<Event> event = shared_->handoff.pop(config_.loop_idle_wait);
            if (!event) {
                continue;
            }
            import_busy_.store(true);
            event->metadata[kBridgedMetaKey] = distributed_.client_id();
            DeliverySummary summary = local_.publish_local(std::move(*event));
            shared_->imported.fetch_add(1, std::memory_order_relaxed);
            if (summary.dropped_queue_full > 0) {
                shared_->import_rejections.fetch_add(summary.dropped_queue_full,
                                                     std::memory_order_relaxed);
            }
            import_busy_.store(false);
        }
    }

    template <typename Pred>
    static bool wait_until_idle(Pred pred, std::chrono::steady_clock::time_point deadline) {
        while (!pred()) {
            if (std::chrono::steady_clock::now() >= deadline) {
                return false;
            }
            std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
        return true;
    }

    PubSubContext& local_;
    DistributedContext& distributed_;
    BridgeConfig config_;
    std::vector<SubscriptionPattern> export_patterns_;
    std::vector<DistributedSubscription> subscriptions_;
    std::shared_ptr<SharedState> shared_;
    std::thread export_thread_;
    std::thread import_thread_;
    std::atomic<bool> started_{false};
    std::atomic<bool> active_{false};
    std::atomic<bool> export_busy_{false};
    std::atomic<bool> import_busy_{false};
    std::mutex stop_mutex_;
    bool stopped_ = false;
};

} // namespace cns
