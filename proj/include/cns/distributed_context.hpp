#pragma once

#include <atomic>
#include <cctype>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "cns/bounded_queue.hpp"
#include "cns/clock.hpp"
#include "cns/errors.hpp"
#include "cns/event.hpp"
#include "cns/logging.hpp"
#include "cns/serde_registry.hpp"
#include "cns/transport.hpp"

namespace cns {

namespace headers {

// Application header prefix. Runtime metadata and application metadata both
// travel under it so transport-native headers stay distinct.
inline constexpr const char* kPrefix = "CNS-";
inline constexpr const char* kFullKey = "CNS-Full-Key";
inline constexpr const char* kBaseKey = "CNS-Base-Key";
inline constexpr const char* kQualifiersKey = "CNS-Qualifiers-Key";
inline constexpr const char* kPublishedAt = "CNS-Published-At"; // ns since Unix epoch, decimal
inline constexpr const char* kClientId = "CNS-Client-Id";

/// Metadata key on localized events naming the transport subject they
/// arrived on.
inline constexpr const char* kTransportSubjectMeta = "transport.subject";

} // namespace headers

enum class RejectionReason { MissingHeader, DeserializeFailed, ValidationFailed, MalformedKey };

inline const char* to_string(RejectionReason reason) {
    switch (reason) {
    case RejectionReason::MissingHeader: return "missing-header";
    case RejectionReason::DeserializeFailed: return "deserialize-failed";
    case RejectionReason::ValidationFailed: return "validation-failed";
    case RejectionReason::MalformedKey: return "malformed-key";
    }
    return "?";
}

struct RejectionRecord {
    std::string subject;
    RejectionReason reason;
    std::int64_t timestamp_ns = 0;
    std::string detail;
};

using ConsumeOutcome = std::variant<Event, RejectionRecord>;

struct PublishOutcome {
    enum class Status { Published, ValidationRejected };
    Status status = Status::Published;
    std::string reason;

    bool published() const { return status == Status::Published; }
};

struct RequestOutcome {
    enum class Status { Reply, Timeout, ReplyRejected, PublishRejected };
    Status status = Status::Timeout;
    std::optional<Event> reply;
    std::optional<RejectionReason> reject_reason;
    std::string detail;
};

struct DistributedSubscription {
    TransportSubscription transport;
};

struct DistributedStopReport {
    std::size_t subscriptions_drained = 0;
    bool clean_close = true;
    bool timed_out = false;
    bool was_noop = false;
};

struct DistributedStats {
    std::uint64_t published = 0;
    std::uint64_t publish_validation_rejections = 0;
    std::uint64_t serialize_failures = 0;
    std::uint64_t delivered = 0; // events handed to sinks
    std::uint64_t rejected = 0;
    std::uint64_t rejected_missing_header = 0;
    std::uint64_t rejected_deserialize = 0;
    std::uint64_t rejected_validation = 0;
    std::uint64_t rejected_malformed_key = 0;
    std::uint64_t publish_validator_calls = 0;
    std::uint64_t consume_validator_calls = 0;
    std::uint64_t responder_errors = 0;
};

struct DistributedConfig {
    std::string client_id = "cns-node";
    std::chrono::nanoseconds drain_deadline = std::chrono::seconds(5);
};

/// Transport-backed context: resolves the serde from the event's base key,
/// validates, serializes, enriches headers with the key forms plus timing
/// and client identity, and publishes on the full-key subject. Inbound
/// envelopes take the inverse path; anything that cannot be reconstructed or
/// validated is rejected with a warning, never a crash.
class DistributedContext {
public:
    using EventSink = std::function<void(const Event&)>;

    DistributedContext(std::unique_ptr<TransportAdapter> transport,
                       std::shared_ptr<const SerDeRegistry> registry,
                       DistributedConfig config = {})
        : transport_(std::move(transport)), registry_(std::move(registry)),
          config_(std::move(config)) {
        if (!transport_) {
            throw Error("DistributedContext requires a transport");
        }
        if (!registry_) {
            throw Error("DistributedContext requires a serde registry");
        }
    }

    ~DistributedContext() { stop(); }

    DistributedContext(const DistributedContext&) = delete;
    DistributedContext& operator=(const DistributedContext&) = delete;

    /// Validate (when configured), serialize, enrich and publish on the
    /// event's full key. A validator failure aborts the publish.
    PublishOutcome publish(const Event& event) {
        return publish_on_subject(event.key.full_key(), event, /*reply_to=*/{});
    }

    /// Reconstruct an inbound envelope. Hostile input allowed; every failure
    /// becomes a RejectionRecord with one warning line.
    ConsumeOutcome consume(const WireEnvelope& envelope) {
        auto full_key_it = envelope.headers.find(headers::kFullKey);
        if (full_key_it == envelope.headers.end()) {
            return reject(envelope, RejectionReason::MissingHeader,
                          "header " + std::string(headers::kFullKey) + " absent");
        }
        std::optional<EventTypeKey> key;
        try {
            key = EventTypeKey::parse(full_key_it->second);
        } catch (const MalformedKeyError& e) {
            return reject(envelope, RejectionReason::MalformedKey, e.what());
        }
        EventTypeSerDe serde = registry_->resolve(*key);
        PayloadValue payload;
        try {
            payload = serde.deserializer(envelope.body);
        } catch (const std::exception& e) {
            return reject(envelope, RejectionReason::DeserializeFailed, e.what());
        }
        if (serde.validator) {
            stats_.consume_validator_calls.fetch_add(1, std::memory_order_relaxed);
            ValidationResult v = serde.validator(payload);
            if (!v.ok) {
                return reject(envelope, RejectionReason::ValidationFailed, v.reason);
            }
        }
        Metadata metadata;
        constexpr std::size_t prefix_len = 4; // "CNS-"
        for (const auto& [name, value] : envelope.headers) {
            if (name.rfind(headers::kPrefix, 0) == 0 && name.size() > prefix_len) {
                metadata.emplace(name.substr(prefix_len), value);
            }
        }
        metadata[headers::kTransportSubjectMeta] = envelope.subject;
        return Event{std::move(*key), std::move(payload), std::move(metadata)};
    }

    /// Matching envelopes are consumed; successfully reconstructed events
    /// reach the sink on the transport delivery thread, one at a time.
    DistributedSubscription subscribe(const std::string& pattern, EventSink sink) {
        require_connected();
        auto transport_sub = transport_->subscribe(
            pattern, [this, sink = std::move(sink)](const WireEnvelope& envelope) {
                ConsumeOutcome outcome = consume(envelope);
                if (auto* event = std::get_if<Event>(&outcome)) {
                    stats_.delivered.fetch_add(1, std::memory_order_relaxed);
                    sink(*event);
                }
            });
        return DistributedSubscription{transport_sub};
    }

    /// Queue-sink variant: matched events are pushed; a full queue drops the
    /// event (counted by the caller's queue policy choice).
    DistributedSubscription subscribe(const std::string& pattern,
                                      std::shared_ptr<BoundedQueue<Event>> queue) {
        return subscribe(pattern, [queue = std::move(queue)](const Event& event) {
            queue->push(event);
        });
    }

    void unsubscribe(DistributedSubscription sub) { transport_->unsubscribe(sub.transport); }

    /// Bounded request-reply on the same subject space: the request is
    /// published with a unique reply inbox and the first reply envelope is
    /// passed back through consume.
    RequestOutcome request(const Event& event, std::chrono::nanoseconds timeout) {
        require_connected();
        struct Pending {
            std::mutex mutex;
            std::condition_variable cv;
            std::optional<ConsumeOutcome> outcome;
        };
        auto pending = std::make_shared<Pending>();
        std::string inbox = transport_->new_inbox();
        TransportSubscription sub = transport_->subscribe(
            inbox, [this, pending](const WireEnvelope& envelope) {
                std::lock_guard lock(pending->mutex);
                if (!pending->outcome) {
                    pending->outcome = consume(envelope);
                    pending->cv.notify_all();
                }
            });

        RequestOutcome out;
        PublishOutcome published = publish_on_subject(event.key.full_key(), event, inbox);
        if (!published.published()) {
            transport_->unsubscribe(sub);
            out.status = RequestOutcome::Status::PublishRejected;
            out.detail = published.reason;
            return out;
        }

        std::unique_lock lock(pending->mutex);
        pending->cv.wait_for(lock, timeout, [&] { return pending->outcome.has_value(); });
        std::optional<ConsumeOutcome> outcome = std::move(pending->outcome);
        lock.unlock();
        transport_->unsubscribe(sub);

        if (!outcome) {
            out.status = RequestOutcome::Status::Timeout;
            return out;
        }
        if (auto* event_reply = std::get_if<Event>(&*outcome)) {
            out.status = RequestOutcome::Status::Reply;
            out.reply = std::move(*event_reply);
            return out;
        }
        const auto& rejection = std::get<RejectionRecord>(*outcome);
        out.status = RequestOutcome::Status::ReplyRejected;
        out.reject_reason = rejection.reason;
        out.detail = rejection.detail;
        return out;
    }

    /// Serve matching requests: each is consumed, handed to the responder,
    /// and the result is published on the request's reply subject through the
    /// same serde pipeline. Responder failures suppress the reply (the
    /// requester times out) and are counted.
    DistributedSubscription respond(const std::string& pattern,
                                    std::function<Event(const Event&)> responder) {
        require_connected();
        auto transport_sub = transport_->subscribe(
            pattern, [this, responder = std::move(responder)](const WireEnvelope& envelope) {
                ConsumeOutcome outcome = consume(envelope);
                auto* request_event = std::get_if<Event>(&outcome);
                if (!request_event) {
                    return;
                }
                stats_.delivered.fetch_add(1, std::memory_order_relaxed);
                if (envelope.reply_to.empty()) {
                    stats_.responder_errors.fetch_add(1, std::memory_order_relaxed);
                    logging::warn("request on \"" + envelope.subject + "\" has no reply subject");
                    return;
                }
                std::optional<Event> reply;
                try {
                    reply = responder(*request_event);
                } catch (const std::exception& e) {
                    stats_.responder_errors.fetch_add(1, std::memory_order_relaxed);
                    logging::warn("responder for \"" + envelope.subject + "\" threw: " + e.what());
                    return;
                }
                try {
                    PublishOutcome sent = publish_on_subject(envelope.reply_to, *reply, {});
                    if (!sent.published()) {
                        stats_.responder_errors.fetch_add(1, std::memory_order_relaxed);
                    }
                } catch (const std::exception& e) {
                    stats_.responder_errors.fetch_add(1, std::memory_order_relaxed);
                    logging::warn(std::string("reply publish failed: ") + e.what());
                }
            });
        return DistributedSubscription{transport_sub};
    }

    /// Drain and unsubscribe everything, then close the connection.
    /// Idempotent; the second call reports a no-op.
    DistributedStopReport stop() {
        bool expected = false;
        if (!stopped_.compare_exchange_strong(expected, true)) {
            return DistributedStopReport{0, true, false, true};
        }
        DrainOutcome drain = transport_->drain_and_unsubscribe(config_.drain_deadline);
        transport_->close();
        DistributedStopReport report;
        report.subscriptions_drained = drain.subscriptions_drained;
        report.timed_out = drain.timed_out;
        report.clean_close = !drain.timed_out;
        return report;
    }

    bool connected() const { return !stopped_.load() && transport_->connected(); }

    bool flush(std::chrono::nanoseconds timeout) { return transport_->flush(timeout); }

    const std::string& client_id() const { return config_.client_id; }
    const SerDeRegistry& registry() const { return *registry_; }
    TransportAdapter& transport() { return *transport_; }

    DistributedStats stats() const {
        DistributedStats out;
        out.published = stats_.published.load();
        out.publish_validation_rejections = stats_.publish_validation_rejections.load();
        out.serialize_failures = stats_.serialize_failures.load();
        out.delivered = stats_.delivered.load();
        out.rejected = stats_.rejected.load();
        out.rejected_missing_header = stats_.rejected_missing_header.load();
        out.rejected_deserialize = stats_.rejected_deserialize.load();
        out.rejected_validation = stats_.rejected_validation.load();
        out.rejected_malformed_key = stats_.rejected_malformed_key.load();
        out.publish_validator_calls = stats_.publish_validator_calls.load();
        out.consume_validator_calls = stats_.consume_validator_calls.load();
        out.responder_errors = stats_.responder_errors.load();
        return out;
    }

    /// Most recent rejection records, oldest first (bounded history).
    std::vector<RejectionRecord> recent_rejections() const {
        std::lock_guard lock(rejections_mutex_);
        return {rejections_.begin(), rejections_.end()};
    }

private:
    void require_connected() const {
        if (!connected()) {
            throw NotConnectedError("distributed context \"" + config_.client_id +
                                    "\" is not connected");
        }
    }

    static bool header_safe(const std::string& s, bool is_name) {
        for (unsigned char c : s) {
            if (c == '\r' || c == '\n') {
                return false;
            }
            if (is_name && (c == ':' || std::isspace(c))) {
                return false;
            }
        }
        return !(is_name && s.empty());
    }

    PublishOutcome publish_on_subject(const std::string& subject, const Event& event,
                                      const std::string& reply_to) {
        require_connected();
        EventTypeSerDe serde = registry_->resolve(event.key);
        if (serde.validator) {
            stats_.publish_validator_calls.fetch_add(1, std::memory_order_relaxed);
            ValidationResult v = serde.validator(event.payload);
            if (!v.ok) {
                stats_.publish_validation_rejections.fetch_add(1, std::memory_order_relaxed);
                return PublishOutcome{PublishOutcome::Status::ValidationRejected, v.reason};
            }
        }
        WireEnvelope envelope;
        envelope.subject = subject;
        envelope.reply_to = reply_to;
        try {
            envelope.body = serde.serializer(event.payload);
        } catch (const std::exception& e) {
            stats_.serialize_failures.fetch_add(1, std::memory_order_relaxed);
            throw SerializationError("payload for \"" + event.key.full_key() +
                                     "\" failed to serialize: " + e.what());
        }
        for (const auto& [name, value] : event.metadata) {
            if (!header_safe(name, true) || !header_safe(value, false)) {
                stats_.serialize_failures.fetch_add(1, std::memory_order_relaxed);
                throw SerializationError("metadata entry \"" + name +
                                         "\" is not representable as a header");
            }
            envelope.headers[headers::kPrefix + name] = value;
        }
        // Standard fields written last: they are authoritative over any
        // colliding application metadata names.
        envelope.headers[headers::kFullKey] = event.key.full_key();
        envelope.headers[headers::kBaseKey] = event.key.base_key();
        envelope.headers[headers::kQualifiersKey] = event.key.qualifiers_key();
        envelope.headers[headers::kPublishedAt] = ns_to_string(now_ns());
        envelope.headers[headers::kClientId] = config_.client_id;
        transport_->publish(envelope);
        stats_.published.fetch_add(1, std::memory_order_relaxed);
        return PublishOutcome{};
    }

    ConsumeOutcome reject(const WireEnvelope& envelope, RejectionReason reason,
                          std::string detail) {
        RejectionRecord record{envelope.subject, reason, now_ns(), std::move(detail)};
        stats_.rejected.fetch_add(1, std::memory_order_relaxed);
        switch (reason) {
        case RejectionReason::MissingHeader:
            stats_.rejected_missing_header.fetch_add(1, std::memory_order_relaxed);
            break;
        case RejectionReason::DeserializeFailed:
            stats_.rejected_deserialize.fetch_add(1, std::memory_order_relaxed);
            break;
        case RejectionReason::ValidationFailed:
            stats_.rejected_validation.fetch_add(1, std::memory_order_relaxed);
            break;
        case RejectionReason::MalformedKey:
            stats_.rejected_malformed_key.fetch_add(1, std::memory_order_relaxed);
            break;
        }
        {
            std::lock_guard lock(rejections_mutex_);
            rejections_.push_back(record);
            if (rejections_.size() > kRejectionHistory) {
                rejections_.pop_front();
            }
        }
        logging::warn("rejected message on \"" + record.subject + "\" (" +
                      to_string(reason) + "): " + record.detail);
        return record;
    }

    struct AtomicStats {
        std::atomic<std::uint64_t> published{0};
        std::atomic<std::uint64_t> publish_validation_rejections{0};
        std::atomic<std::uint64_t> serialize_failures{0};
        std::atomic<std::uint64_t> delivered{0};
        std::atomic<std::uint64_t> rejected{0};
        std::atomic<std::uint64_t> rejected_missing_header{0};
        std::atomic<std::uint64_t> rejected_deserialize{0};
        std::atomic<std::uint64_t> rejected_validation{0};
        std::atomic<std::uint64_t> rejected_malformed_key{0};
        std::atomic<std::uint64_t> publish_validator_calls{0};
        std::atomic<std::uint64_t> consume_validator_calls{0};
        std::atomic<std::uint64_t> responder_errors{0};
    };

    static constexpr std::size_t kRejectionHistory = 1024;

    std::unique_ptr<TransportAdapter> transport_;
    std::shared_ptr<const SerDeRegistry> registry_;
    DistributedConfig config_;
    AtomicStats stats_;
    mutable std::mutex rejections_mutex_;
    std::deque<RejectionRecord> rejections_;
    std::atomic<bool> stopped_{false};
};

} // namespace cns
