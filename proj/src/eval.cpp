#include "evpipe/eval.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "evpipe/event_io.hpp"
#include "evpipe/noise_gen.hpp"

namespace evpipe::eval {

std::string ConfusionReport::to_json() const {
    std::string out = "{";
    out += "\"TP\": " + std::to_string(tp);
    out += ", \"FP\": " + std::to_string(fp);
    out += ", \"TN\": " + std::to_string(tn);
    out += ", \"FN\": " + std::to_string(fn);
    out += ", \"TPR\": " + io::format_double(tpr());
    out += ", \"FPR\": " + io::format_double(fpr());
    out += "}";
    return out;
}

ConfusionReport confusion(const LabeledStream& labeled, const filters::FilterDecision& decision) {
    if (labeled.labels.size() != labeled.stream.events.size())
        throw std::invalid_argument("confusion: labels not aligned with stream");
    if (decision.keep_mask.size() != labeled.stream.events.size())
        throw std::invalid_argument("confusion: mask not aligned with stream");

    ConfusionReport report;
    for (std::size_t i = 0; i < labeled.labels.size(); ++i) {
        const bool kept = decision.keep_mask[i] != 0;
        if (labeled.labels[i] == EventLabel::signal) {
            kept ? ++report.tp : ++report.fn;
        } else {
            kept ? ++report.fp : ++report.tn;
        }
    }
    return report;
}

std::string StreamStats::to_json() const {
    std::string out = "{";
    out += "\"count\": " + std::to_string(count);
    out += ", \"duration_us\": " + std::to_string(duration_us);
    out += ", \"mean_rate_hz_per_px\": " + io::format_double(mean_rate_hz_per_px);
    out += ", \"polarity_balance\": " + io::format_double(polarity_balance);
    out += ", \"per_pixel_max_count\": " + std::to_string(per_pixel_max_count);
    out += "}";
    return out;
}

StreamStats stream_stats(const EventStream& stream) {
    StreamStats stats;
    stats.count = stream.events.size();
    if (stream.events.empty()) return stats;

    stats.duration_us = stream.events.back().t - stream.events.front().t;
    std::int64_t polarity_sum = 0;
    std::vector<std::uint32_t> per_pixel(stream.geometry.pixel_count(), 0);
    for (const Event& e : stream.events) {
        polarity_sum += e.p;
        const std::size_t idx = static_cast<std::size_t>(e.y) * stream.geometry.width + e.x;
        stats.per_pixel_max_count = std::max(stats.per_pixel_max_count, ++per_pixel[idx]);
    }
    stats.polarity_balance = static_cast<double>(polarity_sum) / static_cast<double>(stats.count);
    if (stats.duration_us > 0) {
        const double seconds = static_cast<double>(stats.duration_us) * 1e-6;
        stats.mean_rate_hz_per_px =
            static_cast<double>(stats.count) / (stream.geometry.pixel_count() * seconds);
    }
    return stats;
}

std::string ThroughputReport::to_json() const {
    std::string out = "{";
    out += "\"events_total\": " + std::to_string(events_total);
    out += ", \"wall_seconds\": [";
    for (std::size_t i = 0; i < wall_seconds.size(); ++i) {
        if (i) out += ", ";
        out += io::format_double(wall_seconds[i]);
    }
    out += "], \"events_per_second\": {";
    out += "\"min\": " + io::format_double(events_per_second_min);
    out += ", \"median\": " + io::format_double(events_per_second_median);
    out += ", \"max\": " + io::format_double(events_per_second_max);
    out += "}}";
    return out;
}

ThroughputReport throughput_bench(filters::FilterKind kind, const BenchFilterParams& params,
                                  const EventStream& stream, int repeats, int warmup) {
    if (stream.events.empty()) throw std::invalid_argument("throughput_bench: empty stream");
    if (repeats < 1) throw std::invalid_argument("throughput_bench: repeats must be >= 1");
    if (warmup < 0) throw std::invalid_argument("throughput_bench: warmup must be >= 0");

    auto run_once = [&]() {
        if (kind == filters::FilterKind::nn) return filters::nn_filter(stream, params.nn);
        return filters::dif_filter(stream, params.dif);
    };

    volatile std::size_t sink = 0;  // keeps the filter pass observable
    for (int i = 0; i < warmup; ++i) sink = run_once().kept_count();

    ThroughputReport report;
    report.events_total = stream.events.size();
    report.wall_seconds.reserve(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        const auto start = std::chrono::steady_clock::now();
        sink = run_once().kept_count();
        const auto stop = std::chrono::steady_clock::now();
        report.wall_seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    (void)sink;

    std::vector<double> rates;
    rates.reserve(report.wall_seconds.size());
    for (double s : report.wall_seconds)
        rates.push_back(static_cast<double>(report.events_total) / s);
    std::sort(rates.begin(), rates.end());
    report.events_per_second_min = rates.front();
    report.events_per_second_max = rates.back();
    const std::size_t n = rates.size();
    report.events_per_second_median =
        n % 2 == 1 ? rates[n / 2] : 0.5 * (rates[n / 2 - 1] + rates[n / 2]);
    return report;
}

BenchmarkStream make_benchmark_stream(const SensorGeometry& geometry, std::uint64_t target_events,
                                      double lambda, Timestamp duration_us,
                                      std::uint32_t subdivision, std::uint64_t seed) {
    if (target_events == 0) throw std::invalid_argument("benchmark stream: target must be >= 1");
    if (duration_us <= 0) throw std::invalid_argument("benchmark stream: duration must be positive");

    EventStream noise_events;
    noise_events.geometry = geometry;
    if (lambda > 0.0)
        noise_events = noise::generate_noise(geometry, lambda, duration_us, subdivision, seed);

    // Size the bar so bar + noise lands near the target.
    constexpr double kSpeedPxPerS = 2000.0;
    constexpr std::uint16_t kBarWidth = 8;
    const auto crossings =
        static_cast<std::uint64_t>(static_cast<double>(duration_us) * kSpeedPxPerS / 1e6);
    const std::uint64_t bursts = crossings + (crossings > kBarWidth ? crossings - kBarWidth : 0);
    const std::uint64_t wanted =
        target_events > noise_events.size() ? target_events - noise_events.size() : 1;
    const auto per_crossing = static_cast<std::uint32_t>(
        std::max<std::uint64_t>(1, bursts > 0 ? (wanted + bursts - 1) / bursts : 1));

    EventStream bar = noise::generate_signal_bar(geometry, kBarWidth, kSpeedPxPerS, duration_us,
                                                 per_crossing);

    BenchmarkStream out;
    out.signal_events = bar.size();
    out.noise_events = noise_events.size();
    out.mix = merge(label_all(std::move(bar), EventLabel::signal),
                    label_all(std::move(noise_events), EventLabel::noise));
    return out;
}

}  // namespace evpipe::eval
