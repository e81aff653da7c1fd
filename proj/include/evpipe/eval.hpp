#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evpipe/event_model.hpp"
#include "evpipe/filters.hpp"

namespace evpipe::eval {

/// Filter confusion counts. "Positive" means kept: TP is signal retained,
/// FP is noise retained, so a do-nothing filter scores TPR = FPR = 1.
struct ConfusionReport {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    // 0/0 is defined as 0 so reports stay total on degenerate inputs.
    double tpr() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
    double fpr() const { return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / (fp + tn); }

    std::string to_json() const;
};

/// Exact integer confusion counts; throws std::invalid_argument when the
/// mask is not aligned with the stream.
ConfusionReport confusion(const LabeledStream& labeled, const filters::FilterDecision& decision);

struct StreamStats {
    std::uint64_t count = 0;
    Timestamp duration_us = 0;            // max t - min t, 0 when count < 2
    double mean_rate_hz_per_px = 0.0;     // count / (pixel_count * duration_seconds)
    double polarity_balance = 0.0;        // signed mean of p in [-1, 1]
    std::uint32_t per_pixel_max_count = 0;

    std::string to_json() const;
};

StreamStats stream_stats(const EventStream& stream);

struct ThroughputReport {
    std::uint64_t events_total = 0;
    std::vector<double> wall_seconds;       // one entry per measured repeat
    double events_per_second_min = 0.0;
    double events_per_second_median = 0.0;  // the headline number
    double events_per_second_max = 0.0;

    std::string to_json() const;
};

/// Filter params for throughput_bench; only the member matching `kind` is
/// used.
struct BenchFilterParams {
    filters::NnParams nn;
    filters::DifParams dif;
};

/// Runs the filter end-to-end warmup + repeats times on the calling
/// thread and reports per-repeat events/second. Single-core by design to
/// match how per-event filters deploy; must not run concurrently with
/// other benchmarks in the same process. Throws std::invalid_argument on
/// an empty stream or repeats < 1.
ThroughputReport throughput_bench(filters::FilterKind kind, const BenchFilterParams& params,
                                  const EventStream& stream, int repeats = 3, int warmup = 1);

struct BenchmarkStream {
    LabeledStream mix;             // signal bar merged with shot noise
    std::uint64_t signal_events = 0;
    std::uint64_t noise_events = 0;
};

/// The documented benchmark input: a sweeping-bar signal scene mixed with
/// shot noise at `lambda` Hz/px, sized to roughly `target_events` total.
BenchmarkStream make_benchmark_stream(const SensorGeometry& geometry, std::uint64_t target_events,
                                      double lambda, Timestamp duration_us,
                                      std::uint32_t subdivision, std::uint64_t seed);

}  // namespace evpipe::eval
