#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cns/errors.hpp"

namespace cns {

struct SampleStats {
    double mean = 0.0;
    double stddev = 0.0; // population standard deviation
    double p95 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
};

/// Nearest-rank percentile: the value at 1-based index ceil(q*n) of the
/// sorted sample.
inline double nearest_rank(std::span<const double> sorted, double q) {
    std::size_t n = sorted.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (rank < 1) {
        rank = 1;
    }
    if (rank > n) {
        rank = n;
    }
    return sorted[rank - 1];
}

inline SampleStats compute_stats(std::span<const double> samples) {
    if (samples.empty()) {
        throw EmptySamplesError("compute_stats requires at least one sample");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    double sum = 0.0;
    for (double s : sorted) {
        sum += s;
    }
    double mean = sum / static_cast<double>(sorted.size());
    double var = 0.0;
    for (double s : sorted) {
        var += (s - mean) * (s - mean);
    }
    var /= static_cast<double>(sorted.size());

    SampleStats out;
    out.mean = mean;
    out.stddev = std::sqrt(var);
    out.p95 = nearest_rank(sorted, 0.95);
    out.p99 = nearest_rank(sorted, 0.99);
    out.max = sorted.back();
    return out;
}

inline SampleStats compute_stats(const std::vector<double>& samples) {
    return compute_stats(std::span<const double>(samples.data(), samples.size()));
}

} // namespace cns
