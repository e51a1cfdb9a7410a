// In-process publish/subscribe: one handler subscription for direct
// dispatch, one queue subscription drained by polling.

#include <chrono>
#include <cstdio>

#include "cns/cns.hpp"

using namespace std::chrono_literals;

int main() {
    cns::PubSubContext ctx;

    ctx.subscribe("fabric.node.status.>", [](const cns::Event& event) {
        std::printf("handler got %s  status=%s\n", event.key.full_key().c_str(),
                    event.payload.at("status").get<std::string>().c_str());
    });
    ctx.subscribe("fabric.node.>"); // queue mode: poll below

    auto family = cns::families::status_update();
    for (int i = 0; i < 3; ++i) {
        cns::Event event = cns::make_event(family.bind({"node17", "10s"}),
                                           {{"status", "ok"}, {"sequence", i}});
        auto summary = ctx.publish_local(std::move(event));
        std::printf("published #%d: handlers=%zu enqueued=%zu\n", i, summary.handlers_invoked,
                    summary.enqueued);
    }

    while (auto event = ctx.poll(10ms)) {
        std::printf("polled %s  sequence=%d\n", event->key.full_key().c_str(),
                    event->payload.at("sequence").get<int>());
    }
    return 0;
}
