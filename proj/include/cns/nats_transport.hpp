#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cns/errors.hpp"
#include "cns/logging.hpp"
#include "cns/transport.hpp"

namespace cns {

struct NatsConfig {
    std::string url = "nats://127.0.0.1:4222";
    std::string name = "cns";
    std::chrono::nanoseconds connect_timeout = std::chrono::seconds(5);
};

namespace detail {

struct ParsedUrl {
    std::string host;
    std::uint16_t port = 4222;
};

inline ParsedUrl parse_nats_url(const std::string& url) {
    std::string rest = url;
    auto scheme = rest.find("://");
    if (scheme != std::string::npos) {
        rest = rest.substr(scheme + 3);
    }
    auto slash = rest.find('/');
    if (slash != std::string::npos) {
        rest = rest.substr(0, slash);
    }
    ParsedUrl out;
    auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
        out.host = rest;
    } else {
        out.host = rest.substr(0, colon);
        int port = std::stoi(rest.substr(colon + 1));
        if (port <= 0 || port > 65535) {
            throw Error("invalid port in url \"" + url + "\"");
        }
        out.port = static_cast<std::uint16_t>(port);
    }
    if (out.host.empty()) {
        throw Error("invalid server url \"" + url + "\"");
    }
    return out;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

inline bool parse_size(std::string_view s, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace detail

/// NATS core-protocol client: CONNECT/INFO handshake, HPUB publishing with
/// headers, SUB/UNSUB with wildcard filters, PING/PONG flush, and
/// drain-then-unsubscribe stop. One reader thread dispatches inbound
/// messages to sinks in arrival order.
class NatsTransport final : public TransportAdapter {
public:
    static std::unique_ptr<NatsTransport> connect(const NatsConfig& config) {
        auto transport = std::unique_ptr<NatsTransport>(new NatsTransport(config));
        transport->open();
        return transport;
    }

    ~NatsTransport() override { close(); }

    void publish(const WireEnvelope& envelope) override {
        if (!connected_.load()) {
            throw NotConnectedError("nats connection to " + config_.url + " is closed");
        }
        // HPUB <subject> [reply-to] <#header bytes> <#total bytes>
        std::string headers_block = "NATS/1.0\r\n";
        for (const auto& [name, value] : envelope.headers) {
            headers_block += name;
            headers_block += ": ";
            headers_block += value;
            headers_block += "\r\n";
        }
        headers_block += "\r\n";

        std::string frame = "HPUB ";
        frame += envelope.subject;
        if (!envelope.reply_to.empty()) {
            frame += ' ';
            frame += envelope.reply_to;
        }
        frame += ' ';
        frame += std::to_string(headers_block.size());
        frame += ' ';
        frame += std::to_string(headers_block.size() + envelope.body.size());
        frame += "\r\n";
        frame += headers_block;
        frame += envelope.body;
        frame += "\r\n";
        send_frame(frame);
    }

    TransportSubscription subscribe(const std::string& pattern, EnvelopeSink sink) override {
        if (!connected_.load()) {
            throw NotConnectedError("nats connection to " + config_.url + " is closed");
        }
        std::uint64_t sid;
        {
            std::lock_guard lock(subscriptions_mutex_);
            sid = next_sid_++;
            subscriptions_.emplace(sid, std::move(sink));
        }
        send_frame("SUB " + pattern + " " + std::to_string(sid) + "\r\n");
        return TransportSubscription{sid};
    }

    void unsubscribe(TransportSubscription sub) override {
        {
            std::lock_guard lock(subscriptions_mutex_);
            if (subscriptions_.erase(sub.sid) == 0) {
                return;
            }
        }
        if (connected_.load()) {
            send_frame("UNSUB " + std::to_string(sub.sid) + "\r\n");
        }
    }

    /// PING/PONG round trip: when the PONG arrives the server has processed
    /// everything we sent first, and the reader has dispatched everything
    /// the server sent before the PONG.
    bool flush(std::chrono::nanoseconds timeout) override {
        if (!connected_.load()) {
            return false;
        }
        std::uint64_t target;
        {
            std::lock_guard lock(pong_mutex_);
            target = ++pings_sent_;
        }
        try {
            send_frame("PING\r\n");
        } catch (const NotConnectedError&) {
            return false;
        }
        std::unique_lock lock(pong_mutex_);
        return pong_cv_.wait_for(lock, timeout,
                                 [&] { return pongs_received_ >= target || !connected_.load(); }) &&
               pongs_received_ >= target;
    }

    DrainOutcome drain_and_unsubscribe(std::chrono::nanoseconds deadline) override {
        DrainOutcome outcome;
        std::vector<std::uint64_t> sids;
        {
            std::lock_guard lock(subscriptions_mutex_);
            for (const auto& [sid, sink] : subscriptions_) {
                sids.push_back(sid);
            }
        }
        outcome.subscriptions_drained = sids.size();
        if (!connected_.load()) {
            outcome.timed_out = false;
            clear_subscriptions(sids);
            return outcome;
        }
        try {
            for (std::uint64_t sid : sids) {
                send_frame("UNSUB " + std::to_string(sid) + "\r\n");
            }
            // After the flush the server has handled the UNSUBs and every
            // message it sent beforehand has been dispatched by the reader.
            outcome.timed_out = !flush(deadline);
        } catch (const NotConnectedError&) {
            outcome.timed_out = false; // nothing left to drain from
        }
        clear_subscriptions(sids);
        return outcome;
    }

    void close() override {
        std::lock_guard lock(close_mutex_);
        connected_.store(false);
        if (fd_ >= 0 && !fd_closed_) {
            ::shutdown(fd_, SHUT_RDWR);
        }
        pong_cv_.notify_all();
        if (reader_.joinable() && std::this_thread::get_id() != reader_.get_id()) {
            reader_.join();
        }
        // fd closed exactly once, after the reader stopped using it.
        if (fd_ >= 0 && !fd_closed_) {
            ::close(fd_);
            fd_closed_ = true;
        }
    }

    bool connected() const override { return connected_.load(); }

    std::string new_inbox() override {
        std::uint64_t n = inbox_counter_.fetch_add(1);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "_INBOX.%016llx.%llu",
                      static_cast<unsigned long long>(inbox_seed_),
                      static_cast<unsigned long long>(n));
        return buf;
    }

    const std::string& server_info_json() const { return info_json_; }

private:
    explicit NatsTransport(NatsConfig config) : config_(std::move(config)) {
        std::random_device rd;
        inbox_seed_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }

    void open() {
        detail::ParsedUrl url = detail::parse_nats_url(config_.url);
        struct addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        struct addrinfo* results = nullptr;
        std::string port = std::to_string(url.port);
        if (::getaddrinfo(url.host.c_str(), port.c_str(), &hints, &results) != 0 || !results) {
            throw NotConnectedError("cannot resolve \"" + url.host + "\"");
        }
        int fd = -1;
        for (struct addrinfo* ai = results; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) {
                continue;
            }
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                break;
            }
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(results);
        if (fd < 0) {
            throw NotConnectedError("cannot connect to " + config_.url);
        }
        int nodelay = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &nodelay, sizeof(nodelay));
        fd_ = fd;
        connected_.store(true);

        // Handshake on the calling thread: INFO, CONNECT, PING, PONG.
        std::string line = read_line_blocking();
        if (line.rfind("INFO ", 0) != 0) {
            ::close(fd_);
            fd_ = -1;
            connected_.store(false);
            throw NotConnectedError("unexpected greeting from " + config_.url + ": " + line);
        }
        info_json_ = line.substr(5);
        std::string connect =
            R"({"verbose":false,"pedantic":false,"tls_required":false,"headers":true,)"
            R"("name":")" + config_.name + R"(","lang":"cpp","version":"1.0.0","protocol":1})";
        send_frame("CONNECT " + connect + "\r\nPING\r\n");
        auto deadline = std::chrono::steady_clock::now() + config_.connect_timeout;
        while (true) {
            if (std::chrono::steady_clock::now() > deadline) {
                close();
                throw NotConnectedError("handshake with " + config_.url + " timed out");
            }
            line = read_line_blocking();
            if (line == "PONG") {
                break;
            }
            if (line == "PING") {
                send_frame("PONG\r\n");
            } else if (line.rfind("-ERR", 0) == 0) {
                close();
                throw NotConnectedError("server rejected connection: " + line);
            }
            // +OK and INFO updates are ignored during the handshake.
        }
        reader_ = std::thread([this] { reader_loop(); });
    }

    /// Startup-only line read (one byte at a time keeps leftovers out of the
    /// reader's buffer; the handshake is a handful of short lines).
    std::string read_line_blocking() {
        std::string line;
        char c;
        while (true) {
            ssize_t n = ::recv(fd_, &c, 1, 0);
            if (n <= 0) {
                throw NotConnectedError("connection lost during handshake");
            }
            if (c == '\n') {
                if (!line.empty() && line.back() == '\r') {
                    line.pop_back();
                }
                return line;
            }
            line += c;
        }
    }

    void send_frame(const std::string& frame) {
        std::lock_guard lock(write_mutex_);
        std::size_t sent = 0;
        while (sent < frame.size()) {
            ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) {
                mark_disconnected();
                throw NotConnectedError("write to " + config_.url + " failed");
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    void mark_disconnected() {
        connected_.store(false);
        pong_cv_.notify_all();
    }

    void reader_loop() {
        std::string buffer;
        std::size_t offset = 0;
        std::vector<char> chunk(64 * 1024);
        while (connected_.load()) {
            // Compact the consumed prefix now and then.
            if (offset > 0 && (offset > buffer.size() / 2 || offset > 1 << 20)) {
                buffer.erase(0, offset);
                offset = 0;
            }
            if (!parse_available(buffer, offset)) {
                ssize_t n = ::recv(fd_, chunk.data(), chunk.size(), 0);
                if (n <= 0) {
                    mark_disconnected();
                    return;
                }
                buffer.append(chunk.data(), static_cast<std::size_t>(n));
            }
        }
    }

    /// Parse as many complete frames as the buffer holds. Returns false when
    /// more bytes are needed.
    bool parse_available(std::string& buffer, std::size_t& offset) {
        bool parsed_any = false;
        while (true) {
            std::size_t line_end = buffer.find("\r\n", offset);
            if (line_end == std::string::npos) {
                return parsed_any;
            }
            std::string_view line(buffer.data() + offset, line_end - offset);
            if (line.rfind("MSG", 0) == 0 || line.rfind("HMSG", 0) == 0) {
                bool has_headers = line[0] == 'H';
                auto parts = detail::split_ws(line.substr(has_headers ? 4 : 3));
                // MSG  <subject> <sid> [reply-to] <#bytes>
                // HMSG <subject> <sid> [reply-to] <#hdr> <#total>
                std::size_t expected = has_headers ? 4 : 3;
                bool has_reply = parts.size() == expected + 1;
                if (parts.size() != expected && !has_reply) {
                    logging::warn("malformed message line from server; closing connection");
                    mark_disconnected();
                    return true;
                }
                WireEnvelope envelope;
                envelope.subject.assign(parts[0]);
                std::uint64_t sid = 0;
                {
                    std::size_t v = 0;
                    if (!detail::parse_size(parts[1], v)) {
                        mark_disconnected();
                        return true;
                    }
                    sid = v;
                }
                if (has_reply) {
                    envelope.reply_to.assign(parts[2]);
                }
                std::size_t header_len = 0;
                std::size_t total_len = 0;
                bool sizes_ok;
                if (has_headers) {
                    sizes_ok = detail::parse_size(parts[parts.size() - 2], header_len) &&
                               detail::parse_size(parts[parts.size() - 1], total_len) &&
                               header_len <= total_len;
                } else {
                    sizes_ok = detail::parse_size(parts[parts.size() - 1], total_len);
                }
                if (!sizes_ok) {
                    mark_disconnected();
                    return true;
                }
                std::size_t payload_start = line_end + 2;
                if (buffer.size() < payload_start + total_len + 2) {
                    return parsed_any; // wait for the full payload
                }
                if (has_headers) {
                    parse_header_block(
                        std::string_view(buffer.data() + payload_start, header_len), envelope);
                }
                envelope.body.assign(buffer.data() + payload_start + header_len,
                                     total_len - header_len);
                offset = payload_start + total_len + 2;
                dispatch(sid, envelope);
                parsed_any = true;
                continue;
            }
            offset = line_end + 2;
            parsed_any = true;
            if (line == "PING") {
                send_frame("PONG\r\n");
            } else if (line == "PONG") {
                std::lock_guard lock(pong_mutex_);
                ++pongs_received_;
                pong_cv_.notify_all();
            } else if (line.rfind("-ERR", 0) == 0) {
                logging::warn("server error: " + std::string(line));
            }
            // +OK / INFO updates ignored.
        }
    }

    static void parse_header_block(std::string_view block, WireEnvelope& envelope) {
        // Block: "NATS/1.0[ status]\r\n(Key: Value\r\n)*\r\n"
        std::size_t pos = block.find("\r\n");
        if (pos == std::string_view::npos) {
            return;
        }
        pos += 2;
        while (pos < block.size()) {
            std::size_t end = block.find("\r\n", pos);
            if (end == std::string_view::npos || end == pos) {
                break; // terminating blank line
            }
            std::string_view line = block.substr(pos, end - pos);
            std::size_t colon = line.find(':');
            if (colon != std::string_view::npos) {
                std::string_view name = line.substr(0, colon);
                std::string_view value = line.substr(colon + 1);
                while (!value.empty() && value.front() == ' ') {
                    value.remove_prefix(1);
                }
                envelope.headers.emplace(std::string(name), std::string(value));
            }
            pos = end + 2;
        }
    }

    void dispatch(std::uint64_t sid, const WireEnvelope& envelope) {
        EnvelopeSink sink;
        {
            std::lock_guard lock(subscriptions_mutex_);
            auto it = subscriptions_.find(sid);
            if (it == subscriptions_.end()) {
                return; // unsubscribed while in flight
            }
            sink = it->second;
        }
        try {
            sink(envelope);
        } catch (const std::exception& e) {
            logging::warn(std::string("subscription sink threw: ") + e.what());
        }
    }

    void clear_subscriptions(const std::vector<std::uint64_t>& sids) {
        std::lock_guard lock(subscriptions_mutex_);
        for (std::uint64_t sid : sids) {
            subscriptions_.erase(sid);
        }
    }

    NatsConfig config_;
    int fd_ = -1;
    bool fd_closed_ = false;
    std::mutex close_mutex_;
    std::mutex write_mutex_;
    std::mutex subscriptions_mutex_;
    std::map<std::uint64_t, EnvelopeSink> subscriptions_;
    std::uint64_t next_sid_ = 1;
    std::thread reader_;
    std::atomic<bool> connected_{false};
    std::mutex pong_mutex_;
    std::condition_variable pong_cv_;
    std::uint64_t pings_sent_ = 0;
    std::uint64_t pongs_received_ = 0;
    std::atomic<std::uint64_t> inbox_counter_{0};
    std::uint64_t inbox_seed_ = 0;
    std::string info_json_;
};

} // namespace cns
