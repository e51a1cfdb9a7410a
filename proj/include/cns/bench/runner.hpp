#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cns/bench/record.hpp"
#include "cns/bridge.hpp"
#include "cns/clock.hpp"
#include "cns/distributed_context.hpp"
#include "cns/family_registry.hpp"
#include "cns/local_context.hpp"
#include "cns/loopback_transport.hpp"
#include "cns/nats_transport.hpp"

namespace cns::bench {

/// Raised when a path cannot be set up (server unreachable, bad config).
/// The CLI maps this to exit code 2.
class SetupError : public Error {
public:
    using Error::Error;
};

/// Producer-embedded origin timestamp. Carried as event metadata so it
/// survives the full hybrid path (local queue wait included); the distributed
/// path reads the standard published-at header instead.
inline constexpr const char* kOriginMeta = "Origin-At";

inline std::string make_payload_bytes(std::size_t size, std::uint32_t seed = 20250809) {
    static constexpr char alphabet[] =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789+/";
    std::mt19937 rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, sizeof(alphabet) - 2);
    std::string out(size, '\0');
    for (auto& c : out) {
        c = alphabet[dist(rng)];
    }
    return out;
}

class Runner {
public:
    explicit Runner(BenchConfig config) : config_(std::move(config)) {
        config_.check();
        if (config_.families_path.empty()) {
            bench_family_ = families::snapshot();
        } else {
            auto loaded = load_families(config_.families_path);
            if (loaded.empty()) {
                throw SetupError("family config \"" + config_.families_path + "\" is empty");
            }
            bench_family_ = loaded.front();
            extra_families_.assign(loaded.begin() + 1, loaded.end());
        }
        bench_family_.codec = config_.codec;
        subject_pattern_ = bench_family_.base_key + ".>";
        bound_key_ = bench_family_.bind({"bench"});
    }

    std::vector<BenchmarkRecord> run() {
        switch (config_.series) {
        case Series::Latency:
        case Series::Throughput:
            return {run_flow_series(config_)};
        case Series::Serde:
            return run_serde_comparison();
        case Series::Stop:
            return {run_graceful_stop()};
        }
        throw SetupError("unknown series");
    }

    /// Latency and throughput share one engine; the series only changes which
    /// summary column readers care about.
    BenchmarkRecord run_flow_series(const BenchConfig& config) {
        std::vector<RepetitionResult> reps;
        for (std::size_t i = 0; i < config.warmup; ++i) {
            run_flow_rep(config);
        }
        for (std::size_t i = 0; i < config.repetitions; ++i) {
            reps.push_back(run_flow_rep(config));
        }
        return summarize(config, to_string(config.path), std::move(reps));
    }

    /// The three-case distributed comparison: default codec with validation,
    /// default codec without, text codec with validation.
    std::vector<BenchmarkRecord> run_serde_comparison() {
        struct Case {
            const char* codec;
            bool validate;
            const char* label;
        };
        const Case cases[] = {
            {"native", true, "native+validate"},
            {"native", false, "native-novalidate"},
            {"json", true, "json+validate"},
        };
        std::vector<BenchmarkRecord> records;
        for (const Case& c : cases) {
            BenchConfig config = config_;
            config.series = Series::Serde;
            config.path = PathKind::Distributed;
            config.codec = c.codec;
            config.validate = c.validate;
            Runner sub(config);
            BenchmarkRecord record = sub.run_flow_series(config);
            record.label = c.label;
            records.push_back(std::move(record));
        }
        for (auto& record : records) {
            record.relative_throughput =
                records.front().throughput_mps > 0.0
                    ? record.throughput_mps / records.front().throughput_mps
                    : 0.0;
        }
        return records;
    }

    BenchmarkRecord run_graceful_stop() {
        BenchConfig config = config_;
        config.path = PathKind::Hybrid;
        std::vector<RepetitionResult> reps;
        for (std::size_t i = 0; i < config.warmup; ++i) {
            run_stop_rep(config);
        }
        for (std::size_t i = 0; i < config.repetitions; ++i) {
            reps.push_back(run_stop_rep(config));
        }
        return summarize(config, std::string("stop-") + to_string(config.stop_mode),
                         std::move(reps));
    }

private:
    // ---------------------------------------------------------------- setup

    static DistributedConfig make_dconfig(const BenchConfig& config, const char* role) {
        DistributedConfig out;
        out.client_id = config.client_id_prefix + "-" + role;
        out.drain_deadline = std::chrono::nanoseconds(
            static_cast<std::int64_t>(config.drain_deadline_s * 1e9));
        return out;
    }

    std::shared_ptr<SerDeRegistry> make_registry(const BenchConfig& config) const {
        auto registry = std::make_shared<SerDeRegistry>();
        std::vector<EventFamily> families;
        EventFamily bench = bench_family_;
        bench.codec = config.codec;
        families.push_back(bench);
        families.insert(families.end(), extra_families_.begin(), extra_families_.end());
        install_families(*registry, families, config.validate);
        return registry;
    }

    std::unique_ptr<TransportAdapter> make_transport(const BenchConfig& config,
                                                     const std::shared_ptr<LoopbackHub>& hub,
                                                     const std::string& name) const {
        if (config.transport == TransportKind::Loopback) {
            return hub->connect(name);
        }
        NatsConfig nats;
        nats.url = config.server_url;
        nats.name = name;
        try {
            return NatsTransport::connect(nats);
        } catch (const std::exception& e) {
            throw SetupError("cannot reach server \"" + config.server_url + "\": " + e.what());
        }
    }

    Event make_message(const PayloadValue& payload_template, std::size_t index) const {
        Event event = cns::make_event(bound_key_, payload_template);
        event.payload["sequence"] = index;
        event.metadata[kOriginMeta] = ns_to_string(now_ns());
        return event;
    }

    PayloadValue make_payload_template(const BenchConfig& config) const {
        return PayloadValue{{"data", make_payload_bytes(config.payload_size)}, {"sequence", 0}};
    }

    // ----------------------------------------------------- flow repetitions

    struct Collector {
        std::vector<double> latencies_us;
        std::atomic<std::uint64_t> received{0};
        std::atomic<std::int64_t> last_rx_ns{0};
        std::mutex mutex;
        std::condition_variable cv;

        explicit Collector(std::size_t expected) { latencies_us.reserve(expected); }

        void on_event(std::int64_t origin_ns) {
            std::int64_t now = now_ns();
            {
                std::lock_guard lock(mutex);
                latencies_us.push_back(static_cast<double>(now - origin_ns) / 1000.0);
            }
            last_rx_ns.store(now, std::memory_order_relaxed);
            received.fetch_add(1, std::memory_order_relaxed);
            cv.notify_all();
        }

        bool wait_for(std::uint64_t target, std::chrono::nanoseconds timeout) {
            std::unique_lock lock(mutex);
            return cv.wait_for(lock, timeout, [&] {
                return received.load(std::memory_order_relaxed) >= target;
            });
        }
    };

    static std::int64_t origin_from(const Event& event, const char* meta_key) {
        auto it = event.metadata.find(meta_key);
        if (it == event.metadata.end()) {
            return now_ns();
        }
        return std::stoll(it->second);
    }

    RepetitionResult run_flow_rep(const BenchConfig& config) {
        switch (config.path) {
        case PathKind::Local: return run_local_rep(config);
        case PathKind::Distributed: return run_distributed_rep(config);
        case PathKind::Hybrid: return run_hybrid_rep(config);
        }
        throw SetupError("unknown path");
    }

    RepetitionResult finish_rep(const BenchConfig& config, Collector& collector,
                                std::int64_t first_tx_ns, std::uint64_t sent,
                                std::uint64_t validator_pub, std::uint64_t validator_con) {
        RepetitionResult rep;
        rep.sent = sent;
        rep.received = collector.received.load();
        {
            std::lock_guard lock(collector.mutex);
            if (!collector.latencies_us.empty()) {
                auto stats = compute_stats(collector.latencies_us);
                rep.mean_us = stats.mean;
                rep.stddev_us = stats.stddev;
                rep.p95_us = stats.p95;
                rep.p99_us = stats.p99;
                rep.max_us = stats.max;
            }
        }
        std::int64_t last_rx = collector.last_rx_ns.load();
        if (last_rx > first_tx_ns && rep.received > 0) {
            rep.duration_s = static_cast<double>(last_rx - first_tx_ns) / 1e9;
            rep.throughput_mps = static_cast<double>(rep.received) / rep.duration_s;
        }
        rep.validator_calls_publish = validator_pub;
        rep.validator_calls_consume = validator_con;
        rep.completion_rate = rep.sent ? static_cast<double>(rep.received) /
                                             static_cast<double>(rep.sent)
                                       : 1.0;
        (void)config;
        return rep;
    }

    std::chrono::nanoseconds delivery_deadline(const BenchConfig& config) const {
        auto per_message = std::chrono::microseconds(500);
        auto budget = std::chrono::nanoseconds(per_message) * config.messages;
        auto floor = std::chrono::seconds(20);
        return budget > floor ? budget : floor;
    }

    RepetitionResult run_local_rep(const BenchConfig& config) {
        LocalContextConfig local_config;
        local_config.subscription_queue_capacity = 65536;
        local_config.subscription_queue_policy = OverflowPolicy::Block;
        PubSubContext ctx(local_config);
        ctx.subscribe(subject_pattern_);

        Collector collector(config.messages);
        std::atomic<bool> consumer_done{false};
        std::thread consumer([&] {
            while (collector.received.load() < config.messages) {
                auto event = ctx.poll(std::chrono::milliseconds(100));
                if (event) {
                    collector.on_event(origin_from(*event, kOriginMeta));
                } else if (consumer_done.load()) {
                    return;
                }
            }
        });

        const bool paced = config.series == Series::Latency;
        PayloadValue payload = make_payload_template(config);
        std::int64_t first_tx = now_ns();
        for (std::size_t i = 0; i < config.messages; ++i) {
            ctx.publish_local(make_message(payload, i));
            if (paced && !collector.wait_for(i + 1, std::chrono::seconds(5))) {
                break;
            }
        }
        collector.wait_for(config.messages, delivery_deadline(config));
        consumer_done.store(true);
        consumer.join();
        return finish_rep(config, collector, first_tx, config.messages, 0, 0);
    }

    RepetitionResult run_distributed_rep(const BenchConfig& config) {
        auto hub = config.transport == TransportKind::Loopback ? LoopbackHub::create() : nullptr;
        auto registry = make_registry(config);
        DistributedConfig pub_config = make_dconfig(config, "pub");
        DistributedContext pub(make_transport(config, hub, pub_config.client_id), registry,
                               pub_config);
        DistributedConfig sub_config = make_dconfig(config, "sub");
        DistributedContext sub(make_transport(config, hub, sub_config.client_id), registry,
                               sub_config);

        Collector collector(config.messages);
        sub.subscribe(subject_pattern_, [&](const Event& event) {
            // One-way latency from the publisher-embedded header stamp.
            collector.on_event(origin_from(event, "Published-At"));
        });
        if (!sub.flush(std::chrono::seconds(5))) {
            throw SetupError("subscription flush failed");
        }

        const bool paced = config.series == Series::Latency;
        PayloadValue payload = make_payload_template(config);
        std::int64_t first_tx = now_ns();
        std::uint64_t sent = 0;
        for (std::size_t i = 0; i < config.messages; ++i) {
            if (pub.publish(make_message(payload, i)).published()) {
                ++sent;
            }
            if (paced && !collector.wait_for(sent, std::chrono::seconds(5))) {
                break;
            }
        }
        collector.wait_for(sent, delivery_deadline(config));
        auto pub_stats = pub.stats();
        auto sub_stats = sub.stats();
        sub.stop();
        pub.stop();
        return finish_rep(config, collector, first_tx, sent, pub_stats.publish_validator_calls,
                          sub_stats.consume_validator_calls);
    }

    struct HybridRig {
        std::shared_ptr<LoopbackHub> hub;
        std::shared_ptr<SerDeRegistry> registry;
        std::unique_ptr<PubSubContext> local_a;
        std::unique_ptr<DistributedContext> dctx_a;
        std::unique_ptr<Bridge> bridge_a;
        std::unique_ptr<PubSubContext> local_b;
        std::unique_ptr<DistributedContext> dctx_b;
        std::unique_ptr<Bridge> bridge_b;
    };

    HybridRig make_hybrid_rig(const BenchConfig& config, std::size_t export_capacity,
                              OverflowPolicy export_policy,
                              std::chrono::nanoseconds drain_deadline = std::chrono::seconds(30)) {
        HybridRig rig;
        rig.hub = config.transport == TransportKind::Loopback ? LoopbackHub::create() : nullptr;
        rig.registry = make_registry(config);

        LocalContextConfig a_config;
        a_config.publish_queue_capacity = export_capacity;
        a_config.publish_queue_policy = export_policy;
        rig.local_a = std::make_unique<PubSubContext>(a_config);
        DistributedConfig da = make_dconfig(config, "a");
        rig.dctx_a = std::make_unique<DistributedContext>(
            make_transport(config, rig.hub, da.client_id), rig.registry, da);
        BridgeConfig export_bridge;
        export_bridge.export_patterns = {subject_pattern_};
        export_bridge.drain_deadline = drain_deadline;
        rig.bridge_a = std::make_unique<Bridge>(*rig.local_a, *rig.dctx_a, export_bridge);
        rig.bridge_a->start();

        LocalContextConfig b_config;
        b_config.subscription_queue_capacity = 65536;
        b_config.subscription_queue_policy = OverflowPolicy::Block;
        rig.local_b = std::make_unique<PubSubContext>(b_config);
        DistributedConfig db = make_dconfig(config, "b");
        rig.dctx_b = std::make_unique<DistributedContext>(
            make_transport(config, rig.hub, db.client_id), rig.registry, db);
        BridgeConfig import_bridge;
        import_bridge.import_patterns = {subject_pattern_};
        import_bridge.drain_deadline = drain_deadline;
        import_bridge.handoff_capacity = std::min<std::size_t>(config.messages, 65536) + 64;
        rig.bridge_b = std::make_unique<Bridge>(*rig.local_b, *rig.dctx_b, import_bridge);
        rig.bridge_b->start();

        if (!rig.dctx_b->flush(std::chrono::seconds(5))) {
            throw SetupError("import subscription flush failed");
        }
        return rig;
    }

    RepetitionResult run_hybrid_rep(const BenchConfig& config) {
        HybridRig rig = make_hybrid_rig(config, 8192, OverflowPolicy::Block);
        rig.local_b->subscribe(subject_pattern_);

        Collector collector(config.messages);
        std::atomic<bool> consumer_done{false};
        std::thread consumer([&] {
            while (collector.received.load() < config.messages) {
                auto event = rig.local_b->poll(std::chrono::milliseconds(100));
                if (event) {
                    collector.on_event(origin_from(*event, kOriginMeta));
                } else if (consumer_done.load()) {
                    return;
                }
            }
        });

        const bool paced = config.series == Series::Latency;
        PayloadValue payload = make_payload_template(config);
        std::int64_t first_tx = now_ns();
        std::uint64_t sent = 0;
        for (std::size_t i = 0; i < config.messages; ++i) {
            if (rig.local_a->publish_for_export(make_message(payload, i)) ==
                ExportResult::Accepted) {
                ++sent;
            }
            if (paced && !collector.wait_for(sent, std::chrono::seconds(5))) {
                break;
            }
        }
        collector.wait_for(sent, delivery_deadline(config));
        consumer_done.store(true);
        consumer.join();

        auto pub_stats = rig.dctx_a->stats();
        auto sub_stats = rig.dctx_b->stats();
        rig.bridge_a->stop(StopMode::Drain);
        rig.bridge_b->stop(StopMode::Drain);
        return finish_rep(config, collector, first_tx, sent, pub_stats.publish_validator_calls,
                          sub_stats.consume_validator_calls);
    }

    // ----------------------------------------------------- stop repetitions

    RepetitionResult run_stop_rep(const BenchConfig& config) {
        HybridRig rig = make_hybrid_rig(config, 4096, OverflowPolicy::Block,
                                         std::chrono::seconds(10));
        rig.local_b->subscribe(subject_pattern_);

        Collector collector(1024);
        std::atomic<bool> consumer_halt{false};
        std::thread consumer([&] {
            while (!consumer_halt.load()) {
                auto event = rig.local_b->poll(std::chrono::milliseconds(1));
                if (event) {
                    collector.on_event(origin_from(*event, kOriginMeta));
                }
            }
        });

        PayloadValue payload = make_payload_template(config);
        std::atomic<bool> producer_halt{false};
        std::atomic<std::uint64_t> sent{0};
        std::int64_t first_tx = now_ns();
        std::thread producer([&] {
            for (std::size_t i = 0; i < config.messages && !producer_halt.load(); ++i) {
                auto result = rig.local_a->publish_for_export(make_message(payload, i));
                if (result == ExportResult::Accepted) {
                    sent.fetch_add(1, std::memory_order_relaxed);
                } else if (result == ExportResult::RejectedClosed) {
                    return;
                }
            }
        });

        // The producer is halted first, then the bridges are stopped in the
        // configured mode; the transport is settled between the two stops so
        // the importing side's snapshot sees no late arrivals.
        std::this_thread::sleep_for(std::chrono::duration<double>(config.stop_after_s));
        producer_halt.store(true);
        producer.join();
        const std::uint64_t sent_before_stop = sent.load();

        rig.bridge_a->stop(config.stop_mode);
        if (config.stop_mode == StopMode::Abrupt) {
            rig.dctx_a->stop(); // flush remaining publishes toward the subscriber
        }
        rig.dctx_b->flush(std::chrono::seconds(5));
        rig.bridge_b->stop(config.stop_mode);

        std::uint64_t received_before_join;
        if (config.stop_mode == StopMode::Drain) {
            // Drain semantics: everything accepted must reach the consumer,
            // so the join point includes emptying the local queue.
            auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
            while (rig.local_b->subscription_queue_depth() > 0 &&
                   std::chrono::steady_clock::now() < deadline) {
                std::this_thread::sleep_for(std::chrono::milliseconds(1));
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            consumer_halt.store(true);
            consumer.join();
            received_before_join = collector.received.load();
        } else {
            consumer_halt.store(true);
            consumer.join();
            received_before_join = collector.received.load();
            rig.dctx_b->flush(std::chrono::seconds(2));
            rig.dctx_b->stop();
        }

        // Every accepted message must land in exactly one bucket.
        auto a_stats = rig.bridge_a->stats();
        auto b_stats = rig.bridge_b->stats();
        const std::uint64_t a_export_remnant =
            rig.local_a->export_accepted_total() -
            (a_stats.exported + a_stats.export_failures + a_stats.filtered +
             a_stats.skipped_reimport);
        const std::uint64_t b_handoff_remnant =
            rig.bridge_b->handoff_accepted_total() - b_stats.imported;
        const std::uint64_t unpolled = rig.local_b->subscription_queue_depth();
        const std::uint64_t consume_rejected = rig.dctx_b->stats().rejected;
        const std::uint64_t estimated_lost = a_export_remnant + a_stats.export_failures +
                                             b_stats.handoff_rejections + b_handoff_remnant +
                                             b_stats.import_rejections + unpolled +
                                             consume_rejected;

        RepetitionResult rep =
            finish_rep(config, collector, first_tx, sent_before_stop, 0, 0);
        rep.sent_before_stop = sent_before_stop;
        rep.received_before_join = received_before_join;
        rep.estimated_lost = estimated_lost;
        rep.completion_rate = sent_before_stop == 0
                                  ? 1.0
                                  : static_cast<double>(received_before_join) /
                                        static_cast<double>(sent_before_stop);
        rep.conservation_exact = config.transport == TransportKind::Loopback;
        return rep;
    }

    BenchConfig config_;
    EventFamily bench_family_;
    std::vector<EventFamily> extra_families_;
    std::string subject_pattern_;
    EventTypeKey bound_key_ = EventTypeKey::parse("fabric.node.state.snapshot.bench");
};

} // namespace cns::bench
