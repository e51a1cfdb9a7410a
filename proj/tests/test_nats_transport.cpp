#include "cns/nats_transport.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "cns/bridge.hpp"
#include "cns/distributed_context.hpp"
#include "cns/family_registry.hpp"
#include "support/mini_nats_server.hpp"

using namespace std::chrono_literals;
using cns::Event;
using cns::NatsConfig;
using cns::NatsTransport;
using cns::WireEnvelope;
using cns_test::MiniNatsServer;
using nlohmann::json;

namespace {

std::unique_ptr<NatsTransport> connect(const MiniNatsServer& server, const std::string& name) {
    NatsConfig config;
    config.url = server.url();
    config.name = name;
    return NatsTransport::connect(config);
}

struct EnvelopeCollector {
    std::mutex mutex;
    std::condition_variable cv;
    std::vector<WireEnvelope> envelopes;

    cns::EnvelopeSink sink() {
        return [this](const WireEnvelope& envelope) {
            std::lock_guard lock(mutex);
            envelopes.push_back(envelope);
            cv.notify_all();
        };
    }

    bool wait_for_count(std::size_t n, std::chrono::nanoseconds timeout = 2s) {
        std::unique_lock lock(mutex);
        return cv.wait_for(lock, timeout, [&] { return envelopes.size() >= n; });
    }
};

} // namespace

TEST(NatsTransport, ConnectHandshakeSucceeds) {
    MiniNatsServer server;
    auto transport = connect(server, "t1");
    EXPECT_TRUE(transport->connected());
    EXPECT_NE(transport->server_info_json().find("\"headers\":true"), std::string::npos);
}

TEST(NatsTransport, ConnectToClosedPortFails) {
    MiniNatsServer server;
    std::string url = "nats://127.0.0.1:" + std::to_string(server.port());
    server.stop();
    NatsConfig config;
    config.url = url;
    EXPECT_THROW(NatsTransport::connect(config), cns::NotConnectedError);
}

TEST(NatsTransport, PublishSubscribeWithHeaders) {
    MiniNatsServer server;
    auto pub = connect(server, "pub");
    auto sub = connect(server, "sub");
    EnvelopeCollector collector;
    sub->subscribe("fabric.>", collector.sink());
    ASSERT_TRUE(sub->flush(2s)); // SUB processed before we publish

    WireEnvelope envelope;
    envelope.subject = "fabric.node.status.update";
    envelope.headers = {{"CNS-Full-Key", "fabric.node.status.update"},
                        {"CNS-Qualifiers-Key", ""},
                        {"X-Extra", "value with spaces"}};
    envelope.body = "payload-bytes";
    pub->publish(envelope);

    ASSERT_TRUE(collector.wait_for_count(1));
    const auto& received = collector.envelopes.front();
    EXPECT_EQ(received.subject, envelope.subject);
    EXPECT_EQ(received.body, envelope.body);
    EXPECT_EQ(received.headers.at("CNS-Full-Key"), "fabric.node.status.update");
    EXPECT_EQ(received.headers.at("CNS-Qualifiers-Key"), "");
    EXPECT_EQ(received.headers.at("X-Extra"), "value with spaces");
    EXPECT_TRUE(received.reply_to.empty());
}

TEST(NatsTransport, BodyMayContainProtocolDelimiters) {
    MiniNatsServer server;
    auto pub = connect(server, "pub");
    auto sub = connect(server, "sub");
    EnvelopeCollector collector;
    sub->subscribe("bin.>", collector.sink());
    ASSERT_TRUE(sub->flush(2s));

    std::string body = "abc\r\ndef";
    body += '\0';
    body += "tail\r\n\r\nmore";
    WireEnvelope envelope;
    envelope.subject = "bin.blob.raw.chunk";
    envelope.body = body;
    pub->publish(envelope);

    ASSERT_TRUE(collector.wait_for_count(1));
    EXPECT_EQ(collector.envelopes.front().body, body);
}

TEST(NatsTransport, LargePayloadRoundTrip) {
    MiniNatsServer server;
    auto pub = connect(server, "pub");
    auto sub = connect(server, "sub");
    EnvelopeCollector collector;
    sub->subscribe("big.>", collector.sink());
    ASSERT_TRUE(sub->flush(2s));

    std::string body(256 * 1024, 'x');
    for (std::size_t i = 0; i < body.size(); i += 97) {
        body[i] = static_cast<char>('a' + (i % 26));
    }
    WireEnvelope envelope;
    envelope.subject = "big.blob.raw.chunk";
    envelope.body = body;
    pub->publish(envelope);

    ASSERT_TRUE(collector.wait_for_count(1, 5s));
    EXPECT_EQ(collector.envelopes.front().body.size(), body.size());
    EXPECT_EQ(collector.envelopes.front().body, body);
}

TEST(NatsTransport, WildcardFilteringMatchesSubjectSemantics) {
    MiniNatsServer server;
    auto pub = connect(server, "pub");
    auto sub = connect(server, "sub");
    EnvelopeCollector collector;
    sub->subscribe("a.*.c", collector.sink());
    ASSERT_TRUE(sub->flush(2s));

    for (const char* subject : {"a.b.c", "a.x.c", "a.b.d", "a.b.c.d", "b.b.c"}) {
        WireEnvelope envelope;
        envelope.subject = subject;
        envelope.body = subject;
        pub->publish(envelope);
    }
    ASSERT_TRUE(pub->flush(2s));
    ASSERT_TRUE(sub->flush(2s));
    ASSERT_EQ(collector.envelopes.size(), 2u);
    EXPECT_EQ(collector.envelopes[0].body, "a.b.c");
    EXPECT_EQ(collector.envelopes[1].body, "a.x.c");
}

TEST(NatsTransport, ReplyToTravelsWithTheMessage) {
    MiniNatsServer server;
    auto pub = connect(server, "pub");
    auto sub = connect(server, "sub");
    EnvelopeCollector collector;
    sub->subscribe("req.>", collector.sink());
    ASSERT_TRUE(sub->flush(2s));

    WireEnvelope envelope;
    envelope.subject = "req.node.query.state";
    envelope.reply_to = pub->new_inbox();
    envelope.body = "ask";
    pub->publish(envelope);

    ASSERT_TRUE(collector.wait_for_count(1));
    EXPECT_EQ(collector.envelopes.front().reply_to, envelope.reply_to);
}

TEST(NatsTransport, UnsubscribeStopsDelivery) {
    MiniNatsServer server;
    auto pub = connect(server, "pub");
    auto sub = connect(server, "sub");
    EnvelopeCollector collector;
    auto handle = sub->subscribe("a.>", collector.sink());
    ASSERT_TRUE(sub->flush(2s));

    WireEnvelope envelope;
    envelope.subject = "a.b.c.d";
    envelope.body = "1";
    pub->publish(envelope);
    ASSERT_TRUE(collector.wait_for_count(1));

    sub->unsubscribe(handle);
    ASSERT_TRUE(sub->flush(2s));
    pub->publish(envelope);
    ASSERT_TRUE(pub->flush(2s));
    std::this_thread::sleep_for(20ms);
    EXPECT_EQ(collector.envelopes.size(), 1u);
}

TEST(NatsTransport, DrainDeliversInFlightBeforeUnsubscribing) {
    MiniNatsServer server;
    auto pub = connect(server, "pub");
    auto sub = connect(server, "sub");
    std::atomic<int> received{0};
    sub->subscribe("slow.>", [&](const WireEnvelope&) {
        std::this_thread::sleep_for(2ms);
        ++received;
    });
    ASSERT_TRUE(sub->flush(2s));

    constexpr int kMessages = 25;
    for (int i = 0; i < kMessages; ++i) {
        WireEnvelope envelope;
        envelope.subject = "slow.node.data.item";
        envelope.body = std::to_string(i);
        pub->publish(envelope);
    }
    ASSERT_TRUE(pub->flush(2s)); // everything is at the server now
    auto outcome = sub->drain_and_unsubscribe(10s);
    EXPECT_FALSE(outcome.timed_out);
    EXPECT_EQ(outcome.subscriptions_drained, 1u);
    EXPECT_EQ(received.load(), kMessages);
}

TEST(NatsTransport, DistributedContextsExchangeEventsOverTheWire) {
    MiniNatsServer server;
    auto registry = std::make_shared<cns::SerDeRegistry>();
    cns::install_families(*registry, cns::families::examples());

    cns::DistributedConfig pub_config;
    pub_config.client_id = "wire-pub";
    cns::DistributedContext pub(connect(server, "wire-pub"), registry, pub_config);
    cns::DistributedConfig sub_config;
    sub_config.client_id = "wire-sub";
    cns::DistributedContext sub(connect(server, "wire-sub"), registry, sub_config);

    auto queue = std::make_shared<cns::BoundedQueue<Event>>(16);
    sub.subscribe("fabric.node.status.>", queue);
    ASSERT_TRUE(sub.flush(2s));

    Event sent = cns::make_event(cns::families::status_update().bind({"node17", "10s"}),
                                 {{"status", "ok"}, {"sequence", 42}}, {{"Trace", "wire"}});
    ASSERT_TRUE(pub.publish(sent).published());

    auto received = queue->pop(2s);
    ASSERT_TRUE(received.has_value());
    EXPECT_EQ(received->key, sent.key);
    EXPECT_EQ(received->payload, sent.payload);
    EXPECT_EQ(received->metadata.at("Trace"), "wire");
    EXPECT_EQ(received->metadata.at("Client-Id"), "wire-pub");

    auto report = sub.stop();
    EXPECT_TRUE(report.clean_close);
}

TEST(NatsTransport, RequestReplyOverTheWire) {
    MiniNatsServer server;
    auto registry = std::make_shared<cns::SerDeRegistry>();
    cns::install_families(*registry, cns::families::examples());

    cns::DistributedContext requester(connect(server, "rq"), registry);
    cns::DistributedContext responder(connect(server, "rs"), registry);
    responder.respond("fabric.node.query.>", [](const Event& request) {
        return cns::make_event(cns::EventTypeKey::parse("fabric.node.reply.state"),
                               request.payload);
    });
    ASSERT_TRUE(responder.flush(2s));

    Event request = cns::make_event(cns::EventTypeKey::parse("fabric.node.query.state"),
                                    {{"want", "all"}});
    auto outcome = requester.request(request, 5s);
    ASSERT_EQ(outcome.status, cns::RequestOutcome::Status::Reply);
    EXPECT_EQ(outcome.reply->payload.at("want").get<std::string>(), "all");
}

TEST(NatsTransport, HybridBridgePathOverTheWire) {
    MiniNatsServer server;
    auto registry = std::make_shared<cns::SerDeRegistry>();
    cns::install_families(*registry, cns::families::examples());

    cns::PubSubContext local_a;
    cns::DistributedConfig a_config;
    a_config.client_id = "hw-a";
    cns::DistributedContext dctx_a(connect(server, "hw-a"), registry, a_config);
    cns::BridgeConfig export_config;
    export_config.export_patterns = {"fabric.>"};
    cns::Bridge bridge_a(local_a, dctx_a, export_config);
    bridge_a.start();

    cns::PubSubContext local_b;
    cns::DistributedConfig b_config;
    b_config.client_id = "hw-b";
    cns::DistributedContext dctx_b(connect(server, "hw-b"), registry, b_config);
    cns::BridgeConfig import_config;
    import_config.import_patterns = {"fabric.>"};
    cns::Bridge bridge_b(local_b, dctx_b, import_config);
    bridge_b.start();
    ASSERT_TRUE(dctx_b.flush(2s));

    local_b.subscribe("fabric.>");
    constexpr int kMessages = 30;
    for (int i = 0; i < kMessages; ++i) {
        auto event = cns::make_event(cns::families::status_update().bind({"n1"}),
                                     {{"status", "ok"}, {"sequence", i}});
        ASSERT_EQ(local_a.publish_for_export(event), cns::ExportResult::Accepted);
    }
    for (int i = 0; i < kMessages; ++i) {
        auto event = local_b.poll(5s);
        ASSERT_TRUE(event.has_value()) << "at " << i;
        EXPECT_EQ(event->payload.at("sequence").get<int>(), i);
        EXPECT_EQ(event->metadata.at(cns::kBridgedMetaKey), "hw-b");
    }
    auto report_a = bridge_a.stop(cns::StopMode::Drain);
    auto report_b = bridge_b.stop(cns::StopMode::Drain);
    EXPECT_TRUE(report_a.drained_cleanly);
    EXPECT_TRUE(report_b.drained_cleanly);
}
