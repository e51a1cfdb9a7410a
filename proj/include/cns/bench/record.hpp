#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cns/bridge.hpp"
#include "cns/errors.hpp"
#include "cns/stats.hpp"

namespace cns::bench {

enum class Series { Latency, Throughput, Serde, Stop };
enum class PathKind { Local, Distributed, Hybrid };
enum class TransportKind { Loopback, Nats };

inline const char* to_string(Series series) {
    switch (series) {
    case Series::Latency: return "latency";
    case Series::Throughput: return "throughput";
    case Series::Serde: return "serde";
    case Series::Stop: return "stop";
    }
    return "?";
}

inline const char* to_string(PathKind path) {
    switch (path) {
    case PathKind::Local: return "local";
    case PathKind::Distributed: return "distributed";
    case PathKind::Hybrid: return "hybrid";
    }
    return "?";
}

inline const char* to_string(TransportKind transport) {
    return transport == TransportKind::Loopback ? "loopback" : "nats";
}

inline Series series_from_string(const std::string& s) {
    if (s == "latency") return Series::Latency;
    if (s == "throughput") return Series::Throughput;
    if (s == "serde") return Series::Serde;
    if (s == "stop") return Series::Stop;
    throw Error("unknown series \"" + s + "\"");
}

inline PathKind path_from_string(const std::string& s) {
    if (s == "local") return PathKind::Local;
    if (s == "distributed") return PathKind::Distributed;
    if (s == "hybrid") return PathKind::Hybrid;
    throw Error("unknown path \"" + s + "\"");
}

inline StopMode stop_mode_from_string(const std::string& s) {
    if (s == "abrupt") return StopMode::Abrupt;
    if (s == "drain") return StopMode::Drain;
    throw Error("unknown stop mode \"" + s + "\"");
}

struct BenchConfig {
    Series series = Series::Latency;
    PathKind path = PathKind::Local;
    std::size_t payload_size = 256;
    std::size_t messages = 1000;
    std::size_t repetitions = 3;
    std::size_t warmup = 1;
    std::string codec = "native";
    bool validate = true;
    double stop_after_s = 0.5;
    StopMode stop_mode = StopMode::Abrupt;
    TransportKind transport = TransportKind::Loopback;
    std::string server_url;
    std::string families_path;
    std::string client_id_prefix = "bench";
    double drain_deadline_s = 5.0;

    void check() const {
        if (payload_size == 0) {
            throw Error("payload_size must be > 0");
        }
        if (messages == 0) {
            throw Error("messages must be >= 1");
        }
        if (repetitions == 0) {
            throw Error("repetitions must be >= 1");
        }
    }
};

struct RepetitionResult {
    double mean_us = 0.0;
    double stddev_us = 0.0; // within-run population stddev
    double p95_us = 0.0;
    double p99_us = 0.0;
    double max_us = 0.0;
    double throughput_mps = 0.0;
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    double duration_s = 0.0;
    std::uint64_t validator_calls_publish = 0;
    std::uint64_t validator_calls_consume = 0;
    // Stop series only.
    double completion_rate = 0.0;
    std::uint64_t sent_before_stop = 0;
    std::uint64_t received_before_join = 0;
    std::uint64_t estimated_lost = 0;
    bool conservation_exact = true;
};

struct BenchmarkRecord {
    BenchConfig config;
    std::string label;
    std::vector<RepetitionResult> reps;
    // Summary statistics. Latency stddev is across repetition means; the
    // percentile columns are means of per-repetition percentiles; max is the
    // overall max.
    double mean_latency_us = 0.0;
    double latency_stddev_us = 0.0;
    double p95_us = 0.0;
    double p99_us = 0.0;
    double max_us = 0.0;
    double throughput_mps = 0.0;
    double throughput_stddev_mps = 0.0;
    double completion_rate = 0.0;
    std::uint64_t received_before_join = 0;
    std::uint64_t estimated_lost = 0;
    double relative_throughput = 1.0;
};

inline BenchmarkRecord summarize(BenchConfig config, std::string label,
                                 std::vector<RepetitionResult> reps) {
    if (reps.empty()) {
        throw EmptySamplesError("summarize requires at least one repetition");
    }
    BenchmarkRecord record;
    record.config = std::move(config);
    record.label = std::move(label);
    record.reps = std::move(reps);

    std::vector<double> means, p95s, p99s, throughputs, completions;
    double max_us = 0.0;
    double received_sum = 0.0;
    double lost_sum = 0.0;
    for (const auto& rep : record.reps) {
        means.push_back(rep.mean_us);
        p95s.push_back(rep.p95_us);
        p99s.push_back(rep.p99_us);
        throughputs.push_back(rep.throughput_mps);
        completions.push_back(rep.completion_rate);
        max_us = std::max(max_us, rep.max_us);
        received_sum += static_cast<double>(rep.received_before_join);
        lost_sum += static_cast<double>(rep.estimated_lost);
    }
    auto mean_of = [](const std::vector<double>& v) {
        double sum = 0.0;
        for (double x : v) {
            sum += x;
        }
        return sum / static_cast<double>(v.size());
    };
    auto across = compute_stats(means);
    record.mean_latency_us = across.mean;
    record.latency_stddev_us = across.stddev;
    record.p95_us = mean_of(p95s);
    record.p99_us = mean_of(p99s);
    record.max_us = max_us;
    auto tput = compute_stats(throughputs);
    record.throughput_mps = tput.mean;
    record.throughput_stddev_mps = tput.stddev;
    record.completion_rate = mean_of(completions);
    record.received_before_join =
        static_cast<std::uint64_t>(received_sum / static_cast<double>(record.reps.size()));
    record.estimated_lost =
        static_cast<std::uint64_t>(lost_sum / static_cast<double>(record.reps.size()));
    return record;
}

/// Structural sanity required of every emitted record; violations are the
/// CLI's exit-code-3 condition.
inline bool record_invariants_ok(const BenchmarkRecord& record, std::string* why = nullptr) {
    auto fail = [&](const std::string& reason) {
        if (why) {
            *why = reason;
        }
        return false;
    };
    if (record.reps.empty()) {
        return fail("no repetitions");
    }
    for (const auto& rep : record.reps) {
        if (rep.p95_us > rep.p99_us || rep.p99_us > rep.max_us) {
            return fail("percentile ordering violated");
        }
        if (rep.mean_us > rep.max_us) {
            return fail("mean exceeds max");
        }
        if (rep.completion_rate < 0.0 || rep.completion_rate > 1.0) {
            return fail("completion rate out of range");
        }
        if (record.config.series == Series::Stop) {
            if (rep.received_before_join + rep.estimated_lost != rep.sent_before_stop &&
                rep.conservation_exact) {
                return fail("conservation identity violated");
            }
        }
    }
    if (record.p95_us > record.p99_us + 1e-9 || record.p99_us > record.max_us + 1e-9) {
        return fail("summary percentile ordering violated");
    }
    return true;
}

// ---------------------------------------------------------------------------
// JSON form

inline nlohmann::json rep_to_json(const RepetitionResult& rep) {
    return {
        {"mean_us", rep.mean_us},
        {"stddev_us", rep.stddev_us},
        {"p95_us", rep.p95_us},
        {"p99_us", rep.p99_us},
        {"max_us", rep.max_us},
        {"throughput_mps", rep.throughput_mps},
        {"sent", rep.sent},
        {"received", rep.received},
        {"duration_s", rep.duration_s},
        {"validator_calls_publish", rep.validator_calls_publish},
        {"validator_calls_consume", rep.validator_calls_consume},
        {"completion_rate", rep.completion_rate},
        {"sent_before_stop", rep.sent_before_stop},
        {"received_before_join", rep.received_before_join},
        {"estimated_lost", rep.estimated_lost},
        {"conservation_exact", rep.conservation_exact},
    };
}

inline RepetitionResult rep_from_json(const nlohmann::json& j) {
    RepetitionResult rep;
    rep.mean_us = j.at("mean_us").get<double>();
    rep.stddev_us = j.at("stddev_us").get<double>();
    rep.p95_us = j.at("p95_us").get<double>();
    rep.p99_us = j.at("p99_us").get<double>();
    rep.max_us = j.at("max_us").get<double>();
    rep.throughput_mps = j.at("throughput_mps").get<double>();
    rep.sent = j.at("sent").get<std::uint64_t>();
    rep.received = j.at("received").get<std::uint64_t>();
    rep.duration_s = j.at("duration_s").get<double>();
    rep.validator_calls_publish = j.at("validator_calls_publish").get<std::uint64_t>();
    rep.validator_calls_consume = j.at("validator_calls_consume").get<std::uint64_t>();
    rep.completion_rate = j.at("completion_rate").get<double>();
    rep.sent_before_stop = j.at("sent_before_stop").get<std::uint64_t>();
    rep.received_before_join = j.at("received_before_join").get<std::uint64_t>();
    rep.estimated_lost = j.at("estimated_lost").get<std::uint64_t>();
    rep.conservation_exact = j.at("conservation_exact").get<bool>();
    return rep;
}

inline nlohmann::json record_to_json(const BenchmarkRecord& record) {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& rep : record.reps) {
        reps.push_back(rep_to_json(rep));
    }
    return {
        {"series", to_string(record.config.series)},
        {"path", to_string(record.config.path)},
        {"transport", to_string(record.config.transport)},
        {"label", record.label},
        {"payload_size", record.config.payload_size},
        {"messages", record.config.messages},
        {"repetitions", record.config.repetitions},
        {"warmup", record.config.warmup},
        {"codec", record.config.codec},
        {"validate", record.config.validate},
        {"stop_after_s", record.config.stop_after_s},
        {"stop_mode", to_string(record.config.stop_mode)},
        {"reps", reps},
        {"summary",
         {
             {"mean_latency_us", record.mean_latency_us},
             {"latency_stddev_us", record.latency_stddev_us},
             {"p95_us", record.p95_us},
             {"p99_us", record.p99_us},
             {"max_us", record.max_us},
             {"throughput_mps", record.throughput_mps},
             {"throughput_stddev_mps", record.throughput_stddev_mps},
             {"completion_rate", record.completion_rate},
             {"received_before_join", record.received_before_join},
             {"estimated_lost", record.estimated_lost},
             {"relative_throughput", record.relative_throughput},
         }},
    };
}

inline BenchmarkRecord record_from_json(const nlohmann::json& j) {
    BenchmarkRecord record;
    record.config.series = series_from_string(j.at("series").get<std::string>());
    record.config.path = path_from_string(j.at("path").get<std::string>());
    record.config.transport = j.at("transport").get<std::string>() == "nats"
                                  ? TransportKind::Nats
                                  : TransportKind::Loopback;
    record.label = j.at("label").get<std::string>();
    record.config.payload_size = j.at("payload_size").get<std::size_t>();
    record.config.messages = j.at("messages").get<std::size_t>();
    record.config.repetitions = j.at("repetitions").get<std::size_t>();
    record.config.warmup = j.at("warmup").get<std::size_t>();
    record.config.codec = j.at("codec").get<std::string>();
    record.config.validate = j.at("validate").get<bool>();
    record.config.stop_after_s = j.at("stop_after_s").get<double>();
    record.config.stop_mode = stop_mode_from_string(j.at("stop_mode").get<std::string>());
    for (const auto& rep : j.at("reps")) {
        record.reps.push_back(rep_from_json(rep));
    }
    const auto& summary = j.at("summary");
    record.mean_latency_us = summary.at("mean_latency_us").get<double>();
    record.latency_stddev_us = summary.at("latency_stddev_us").get<double>();
    record.p95_us = summary.at("p95_us").get<double>();
    record.p99_us = summary.at("p99_us").get<double>();
    record.max_us = summary.at("max_us").get<double>();
    record.throughput_mps = summary.at("throughput_mps").get<double>();
    record.throughput_stddev_mps = summary.at("throughput_stddev_mps").get<double>();
    record.completion_rate = summary.at("completion_rate").get<double>();
    record.received_before_join = summary.at("received_before_join").get<std::uint64_t>();
    record.estimated_lost = summary.at("estimated_lost").get<std::uint64_t>();
    record.relative_throughput = summary.at("relative_throughput").get<double>();
    return record;
}

inline std::string records_to_json_text(const std::vector<BenchmarkRecord>& records) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& record : records) {
        out.push_back(record_to_json(record));
    }
    return out.dump(2) + "\n";
}

inline std::vector<BenchmarkRecord> records_from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    std::vector<BenchmarkRecord> out;
    for (const auto& entry : doc) {
        out.push_back(record_from_json(entry));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV form: a fixed documented column order, one row per repetition plus a
// closing "summary" row per record. Labels must not contain commas.

inline const char* csv_header() {
    return "series,path,transport,label,payload_size,messages,repetitions,warmup,codec,"
           "validate,stop_after_s,stop_mode,rep,mean_us,stddev_us,p95_us,p99_us,max_us,"
           "throughput_mps,sent,received,duration_s,validator_calls_publish,"
           "validator_calls_consume,completion_rate,sent_before_stop,received_before_join,"
           "estimated_lost,conservation_exact,relative_throughput";
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

} // namespace detail

inline std::string records_to_csv_text(const std::vector<BenchmarkRecord>& records) {
    std::ostringstream out;
    out << csv_header() << "\n";
    for (const auto& record : records) {
        auto config_prefix = [&] {
            std::ostringstream prefix;
            prefix << to_string(record.config.series) << ',' << to_string(record.config.path)
                   << ',' << to_string(record.config.transport) << ',' << record.label << ','
                   << record.config.payload_size << ',' << record.config.messages << ','
                   << record.config.repetitions << ',' << record.config.warmup << ','
                   << record.config.codec << ',' << (record.config.validate ? "on" : "off")
                   << ',' << detail::fmt_double(record.config.stop_after_s) << ','
                   << to_string(record.config.stop_mode) << ',';
            return prefix.str();
        }();
        std::size_t rep_index = 1;
        for (const auto& rep : record.reps) {
            out << config_prefix << rep_index++ << ',' << detail::fmt_double(rep.mean_us) << ','
                << detail::fmt_double(rep.stddev_us) << ',' << detail::fmt_double(rep.p95_us)
                << ',' << detail::fmt_double(rep.p99_us) << ',' << detail::fmt_double(rep.max_us)
                << ',' << detail::fmt_double(rep.throughput_mps) << ',' << rep.sent << ','
                << rep.received << ',' << detail::fmt_double(rep.duration_s) << ','
                << rep.validator_calls_publish << ',' << rep.validator_calls_consume << ','
                << detail::fmt_double(rep.completion_rate) << ',' << rep.sent_before_stop << ','
                << rep.received_before_join << ',' << rep.estimated_lost << ','
                << (rep.conservation_exact ? 1 : 0) << ','
                << detail::fmt_double(record.relative_throughput) << "\n";
        }
        out << config_prefix << "summary," << detail::fmt_double(record.mean_latency_us) << ','
            << detail::fmt_double(record.latency_stddev_us) << ','
            << detail::fmt_double(record.p95_us) << ',' << detail::fmt_double(record.p99_us)
            << ',' << detail::fmt_double(record.max_us) << ','
            << detail::fmt_double(record.throughput_mps) << ",0,0,"
            << detail::fmt_double(record.throughput_stddev_mps) << ",0,0,"
            << detail::fmt_double(record.completion_rate) << ",0," << record.received_before_join
            << ',' << record.estimated_lost << ",1,"
            << detail::fmt_double(record.relative_throughput) << "\n";
    }
    return out.str();
}

inline std::vector<BenchmarkRecord> records_from_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != csv_header()) {
        throw Error("csv header mismatch");
    }
    std::vector<BenchmarkRecord> records;
    BenchmarkRecord current;
    bool open = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto f = detail::split_csv_line(line);
        if (f.size() != 30) {
            throw Error("csv row has " + std::to_string(f.size()) + " fields");
        }
        BenchConfig config;
        config.series = series_from_string(f[0]);
        config.path = path_from_string(f[1]);
        config.transport = f[2] == "nats" ? TransportKind::Nats : TransportKind::Loopback;
        config.payload_size = std::stoull(f[4]);
        config.messages = std::stoull(f[5]);
        config.repetitions = std::stoull(f[6]);
        config.warmup = std::stoull(f[7]);
        config.codec = f[8];
        config.validate = f[9] == "on";
        config.stop_after_s = std::stod(f[10]);
        config.stop_mode = stop_mode_from_string(f[11]);

        if (!open) {
            current = BenchmarkRecord{};
            current.config = config;
            current.label = f[3];
            open = true;
        }
        if (f[12] == "summary") {
            current.mean_latency_us = std::stod(f[13]);
            current.latency_stddev_us = std::stod(f[14]);
            current.p95_us = std::stod(f[15]);
            current.p99_us = std::stod(f[16]);
            current.max_us = std::stod(f[17]);
            current.throughput_mps = std::stod(f[18]);
            current.throughput_stddev_mps = std::stod(f[21]);
            current.completion_rate = std::stod(f[24]);
            current.received_before_join = std::stoull(f[26]);
            current.estimated_lost = std::stoull(f[27]);
            current.relative_throughput = std::stod(f[29]);
            records.push_back(std::move(current));
            open = false;
        } else {
            RepetitionResult rep;
            rep.mean_us = std::stod(f[13]);
            rep.stddev_us = std::stod(f[14]);
            rep.p95_us = std::stod(f[15]);
            rep.p99_us = std::stod(f[16]);
            rep.max_us = std::stod(f[17]);
            rep.throughput_mps = std::stod(f[18]);
            rep.sent = std::stoull(f[19]);
            rep.received = std::stoull(f[20]);
            rep.duration_s = std::stod(f[21]);
            rep.validator_calls_publish = std::stoull(f[22]);
            rep.validator_calls_consume = std::stoull(f[23]);
            rep.completion_rate = std::stod(f[24]);
            rep.sent_before_stop = std::stoull(f[25]);
            rep.received_before_join = std::stoull(f[26]);
            rep.estimated_lost = std::stoull(f[27]);
            rep.conservation_exact = f[28] == "1";
            current.reps.push_back(rep);
        }
    }
    if (open) {
        throw Error("csv ended mid-record (missing summary row)");
    }
    return records;
}

} // namespace cns::bench
