#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace cns {

/// One message as it crosses the wire. `subject` is the event full_key for
/// ordinary publications (replies travel on the requester's inbox subject).
/// `reply_to` is set on requests and empty otherwise.
struct WireEnvelope {
    std::string subject;
    std::map<std::string, std::string> headers;
    std::string body;
    std::string reply_to;
};

using EnvelopeSink = std::function<void(const WireEnvelope&)>;

struct TransportSubscription {
    std::uint64_t sid = 0;
    bool operator==(const TransportSubscription&) const = default;
};

struct DrainOutcome {
    std::size_t subscriptions_drained = 0;
    bool timed_out = false;
};

/// Subject-based transport with wildcard subscriptions. Implementations:
/// LoopbackHub adapters (in-memory, hermetic tests) and NatsTransport (the
/// real wire). Subjects delivered to a sink always match the sink's pattern;
/// delivery is one envelope at a time per subscription, in receipt order.
class TransportAdapter {
public:
    virtual ~TransportAdapter() = default;

    /// Throws NotConnectedError if the connection is gone.
    virtual void publish(const WireEnvelope& envelope) = 0;

    virtual TransportSubscription subscribe(const std::string& pattern, EnvelopeSink sink) = 0;

    virtual void unsubscribe(TransportSubscription sub) = 0;

    /// Round-trips the transport so everything published before the call has
    /// been processed and everything delivered to us has been dispatched.
    /// Returns false on timeout.
    virtual bool flush(std::chrono::nanoseconds timeout) = 0;

    /// Complete delivery of already-received messages, then unsubscribe
    /// everything. Connection stays open for publishes until close().
    virtual DrainOutcome drain_and_unsubscribe(std::chrono::nanoseconds deadline) = 0;

    virtual void close() = 0;

    virtual bool connected() const = 0;

    /// Fresh unique subject usable as a reply inbox.
    virtual std::string new_inbox() = 0;
};

} // namespace cns
