// cnsbench: reproduces the four measurement series (latency, throughput,
// serde comparison, graceful stop) across the local, distributed and hybrid
// paths, against --loopback (hermetic) or a NATS server via --server.
//
// Exit codes: 0 success, 2 setup failure, 3 record invariant violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cns/bench/record.hpp"
#include "cns/bench/runner.hpp"

namespace {

using cns::bench::BenchConfig;
using cns::bench::BenchmarkRecord;
using cns::bench::PathKind;
using cns::bench::Series;
using cns::bench::TransportKind;

struct CliOptions {
    BenchConfig config;
    std::string path = "local";
    std::string validate = "on";
    std::string stop_mode = "abrupt";
    std::string server;
    bool loopback = false;
    bool paper_preset = false;
    std::string output;
    std::string format = "json";
    bool messages_set = false;
    bool stop_after_set = false;
};

void apply_presets(CliOptions& opts) {
    if (!opts.messages_set) {
        switch (opts.config.series) {
        case Series::Latency: opts.config.messages = opts.paper_preset ? 3000 : 1000; break;
        case Series::Throughput: opts.config.messages = opts.paper_preset ? 50000 : 10000; break;
        case Series::Serde: opts.config.messages = opts.paper_preset ? 50000 : 10000; break;
        case Series::Stop: opts.config.messages = opts.paper_preset ? 100000 : 20000; break;
        }
    }
    if (!opts.stop_after_set) {
        opts.config.stop_after_s = opts.paper_preset ? 2.0 : 0.5;
    }
}

int finalize(CliOptions& opts) {
    apply_presets(opts);
    opts.config.path = cns::bench::path_from_string(opts.path);
    opts.config.validate = opts.validate == "on";
    opts.config.stop_mode = cns::bench::stop_mode_from_string(opts.stop_mode);
    if (!opts.server.empty()) {
        opts.config.transport = TransportKind::Nats;
        opts.config.server_url = opts.server;
    } else {
        opts.config.transport = TransportKind::Loopback;
    }
    // The serde series is defined on the distributed path and the stop series
    // on the hybrid path.
    if (opts.config.series == Series::Serde) {
        opts.config.path = PathKind::Distributed;
    }
    if (opts.config.series == Series::Stop) {
        opts.config.path = PathKind::Hybrid;
    }

    std::vector<BenchmarkRecord> records;
    try {
        cns::bench::Runner runner(opts.config);
        records = runner.run();
    } catch (const cns::bench::SetupError& e) {
        std::cerr << "setup failed: " << e.what() << "\n";
        return 2;
    } catch (const cns::Error& e) {
        std::cerr << "setup failed: " << e.what() << "\n";
        return 2;
    }

    for (const auto& record : records) {
        std::string why;
        if (!cns::bench::record_invariants_ok(record, &why)) {
            std::cerr << "record invariant violated: " << why << "\n";
            return 3;
        }
    }

    // Human-readable summary on stderr; the record stream stays clean.
    for (const auto& record : records) {
        std::fprintf(stderr,
                     "%s %s [%s] payload=%zuB msgs=%zu reps=%zu: mean=%.1fus (+/-%.1f) "
                     "p95=%.1fus p99=%.1fus tput=%.0f msg/s",
                     cns::bench::to_string(record.config.series),
                     cns::bench::to_string(record.config.path), record.label.c_str(),
                     record.config.payload_size, record.config.messages,
                     record.config.repetitions, record.mean_latency_us,
                     record.latency_stddev_us, record.p95_us, record.p99_us,
                     record.throughput_mps);
        if (record.config.series == Series::Stop) {
            std::fprintf(stderr, " completion=%.5f received=%llu lost=%llu",
                         record.completion_rate,
                         static_cast<unsigned long long>(record.received_before_join),
                         static_cast<unsigned long long>(record.estimated_lost));
        }
        std::fprintf(stderr, "\n");
    }
    if (opts.config.series == Series::Serde && records.size() == 3) {
        auto pct = [](double a, double b) { return b > 0.0 ? (a / b - 1.0) * 100.0 : 0.0; };
        std::fprintf(stderr,
                     "serde deltas: validation %.1f%% (native+validate vs native-novalidate), "
                     "codec %.1f%% (json+validate vs native+validate)\n",
                     pct(records[0].throughput_mps, records[1].throughput_mps),
                     pct(records[2].throughput_mps, records[0].throughput_mps));
    }

    std::string text = opts.format == "csv" ? cns::bench::records_to_csv_text(records)
                                            : cns::bench::records_to_json_text(records);
    if (opts.output.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(opts.output);
        if (!out) {
            std::cerr << "cannot open output file \"" << opts.output << "\"\n";
            return 2;
        }
        out << text;
    }
    return 0;
}

void add_common_flags(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--path", opts.path, "Communication path")
        ->check(CLI::IsMember({"local", "distributed", "hybrid"}));
    cmd->add_option("--payload-size", opts.config.payload_size, "Payload bytes")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--messages", opts.config.messages, "Messages per run")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { opts.messages_set = true; });
    cmd->add_option("--repetitions", opts.config.repetitions, "Recorded repetitions")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--warmup", opts.config.warmup, "Unrecorded warm-up runs");
    cmd->add_option("--codec", opts.config.codec, "Payload codec")
        ->check(CLI::IsMember({"native", "json"}));
    cmd->add_option("--validate", opts.validate, "Apply family validators")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--stop-after", opts.config.stop_after_s, "Stop series: producer halt (s)")
        ->each([&](const std::string&) { opts.stop_after_set = true; });
    cmd->add_option("--stop-mode", opts.stop_mode, "Stop series: bridge stop mode")
        ->check(CLI::IsMember({"abrupt", "drain"}));
    cmd->add_option("--server", opts.server, "NATS server URL (nats://host:port)");
    cmd->add_flag("--loopback", opts.loopback, "In-memory transport (default)");
    cmd->add_flag("--paper-preset", opts.paper_preset,
                  "Full-size message counts (3k/50k/100k, 2.0s stop)");
    cmd->add_option("--output", opts.output, "Write records to a file instead of stdout");
    cmd->add_option("--format", opts.format, "Record format")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--families", opts.config.families_path,
                    "Declarative event-family config (first family carries the payload)");
    cmd->add_option("--client-id", opts.config.client_id_prefix,
                    "Client identity prefix for distributed contexts");
    cmd->add_option("--drain-deadline", opts.config.drain_deadline_s,
                    "Distributed drain deadline in seconds");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cns event fabric benchmark harness"};
    app.require_subcommand(1);

    CliOptions opts;
    auto* latency = app.add_subcommand("latency", "One-way latency series");
    auto* throughput = app.add_subcommand("throughput", "Delivery rate series");
    auto* serde = app.add_subcommand("serde", "Codec/validation comparison (distributed path)");
    auto* stop = app.add_subcommand("stop", "Forced-shutdown series (hybrid path)");
    for (auto* cmd : {latency, throughput, serde, stop}) {
        add_common_flags(cmd, opts);
    }

    CLI11_PARSE(app, argc, argv);

    if (latency->parsed()) {
        opts.config.series = Series::Latency;
    } else if (throughput->parsed()) {
        opts.config.series = Series::Throughput;
    } else if (serde->parsed()) {
        opts.config.series = Series::Serde;
    } else {
        opts.config.series = Series::Stop;
    }
    return finalize(opts);
}
