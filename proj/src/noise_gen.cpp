#include "evpipe/noise_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evpipe/rng.hpp"

namespace evpipe::noise {

void NoiseSpec::validate(const SensorGeometry& geometry) const {
    if (lambda < 0.0 || !std::isfinite(lambda))
        throw std::invalid_argument("noise: lambda must be finite and >= 0");
    if (subdivision < 1) throw std::invalid_argument("noise: subdivision must be >= 1");
    if (geometry.pixel_count() == 0) throw std::invalid_argument("noise: empty sensor");
    if (lambda > 0.0) {
        const double p = 1.0 / (static_cast<double>(geometry.pixel_count()) * subdivision);
        if (p > 0.01)
            throw std::invalid_argument(
                "noise: per-pixel step probability 1/(N*D) exceeds 0.01; increase subdivision");
    }
}

void LevelSet::validate() const {
    if (levels.empty()) throw std::invalid_argument("level set: must be non-empty");
    for (double v : levels)
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("level set: levels must be finite and >= 0");
    auto sorted = levels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("level set: duplicate level");
}

const LevelSet& default_level_set() {
    static const LevelSet set{{0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0}};
    return set;
}

TimeStep compute_time_step(double lambda, std::uint64_t pixel_count, std::uint32_t subdivision) {
    if (lambda <= 0.0 || !std::isfinite(lambda))
        throw std::invalid_argument("compute_time_step: lambda must be > 0");
    if (pixel_count < 1) throw std::invalid_argument("compute_time_step: pixel count must be >= 1");
    if (subdivision < 1) throw std::invalid_argument("compute_time_step: subdivision must be >= 1");
    TimeStep out;
    out.dt_seconds = 1.0 / (lambda * static_cast<double>(pixel_count) * subdivision);
    out.pixel_probability = lambda * out.dt_seconds;
    return out;
}

EventStream generate_noise(const SensorGeometry& geometry, double lambda, Timestamp duration_us,
                           std::uint32_t subdivision, std::uint64_t seed) {
    NoiseSpec spec{lambda, subdivision, seed};
    spec.validate(geometry);
    if (duration_us <= 0) throw std::invalid_argument("generate_noise: duration must be positive");

    EventStream out;
    out.geometry = geometry;
    if (lambda == 0.0) return out;

    const std::uint64_t pixels = geometry.pixel_count();
    const TimeStep ts = compute_time_step(lambda, pixels, subdivision);
    const double dt_us = ts.dt_seconds * 1e6;
    const double duration_s = static_cast<double>(duration_us) * 1e-6;
    const auto steps = static_cast<std::uint64_t>(duration_s / ts.dt_seconds);
    // Whole-sensor emission probability per step; exactly 1/subdivision by
    // construction.
    const double step_probability = 1.0 / subdivision;
    const double log_keep = std::log1p(-step_probability);

    out.events.reserve(static_cast<std::size_t>(
        lambda * static_cast<double>(pixels) * duration_s * 1.1) + 16);

    rng::SplitMix64 gen(seed);
    std::uint64_t step = 0;
    for (;;) {
        // Jump straight to the next successful trial: the number of failed
        // steps before a success is geometric, so sampling it directly
        // draws from exactly the per-step Bernoulli chain.
        const double u = gen.next_double_open();
        const double gap = std::floor(std::log(u) / log_keep);
        if (gap >= static_cast<double>(steps - step)) break;
        step += static_cast<std::uint64_t>(gap);
        if (step >= steps) break;

        Event e;
        e.t = static_cast<Timestamp>(static_cast<double>(step) * dt_us);
        const std::uint64_t pixel = gen.next_below(pixels);
        e.x = static_cast<std::uint16_t>(pixel % geometry.width);
        e.y = static_cast<std::uint16_t>(pixel / geometry.width);
        e.p = gen.next_bool() ? 1 : -1;
        out.events.push_back(e);
        ++step;
        if (step >= steps) break;
    }
    return out;
}

LabeledStream inject_noise(const EventStream& signal, const NoiseSpec& spec,
                           std::optional<WindowSpec> window) {
    spec.validate(signal.geometry);

    Timestamp t0 = 0;
    Timestamp duration = 0;
    if (window) {
        t0 = window->t0;
        duration = window->duration;
        if (duration <= 0) throw std::invalid_argument("inject_noise: window duration must be positive");
    } else if (!signal.events.empty()) {
        t0 = signal.events.front().t;
        duration = signal.events.back().t - t0 + 1;  // closed [min t, max t]
    }

    LabeledStream labeled_signal = label_all(signal, EventLabel::signal);
    if (spec.lambda == 0.0 || duration <= 0) return labeled_signal;

    EventStream noise =
        generate_noise(signal.geometry, spec.lambda, duration, spec.subdivision, spec.seed);
    for (Event& e : noise.events) e.t += t0;
    return merge(labeled_signal, label_all(std::move(noise), EventLabel::noise));
}

LabeledStream mix_recorded_noise(const EventStream& signal, const EventStream& recording,
                                 const WindowSpec& target_window, Timestamp recording_offset_us) {
    if (target_window.duration <= 0)
        throw std::invalid_argument("mix_recorded_noise: window duration must be positive");
    if (recording_offset_us < 0)
        throw std::invalid_argument("mix_recorded_noise: offset must be >= 0");
    if (recording.geometry.width < signal.geometry.width ||
        recording.geometry.height < signal.geometry.height)
        throw std::invalid_argument("mix_recorded_noise: recording geometry smaller than signal");

    const Timestamp rec_start = recording.events.empty() ? 0 : recording.events.front().t;
    const Timestamp rec_duration =
        recording.events.empty() ? 0 : recording.events.back().t - rec_start + 1;
    if (rec_duration < recording_offset_us + target_window.duration)
        throw std::invalid_argument("mix_recorded_noise: recording shorter than target window");

    EventStream slice =
        slice_window(recording, rec_start + recording_offset_us, target_window.duration);
    const Timestamp shift = target_window.t0 - (rec_start + recording_offset_us);
    EventStream cropped;
    cropped.geometry = signal.geometry;
    cropped.events.reserve(slice.events.size());
    for (Event e : slice.events) {
        if (e.x >= signal.geometry.width || e.y >= signal.geometry.height) continue;
        e.t += shift;
        cropped.events.push_back(e);
    }

    return merge(label_all(signal, EventLabel::signal),
                 label_all(std::move(cropped), EventLabel::noise));
}

double draw_noise_level(const LevelSet& levels, std::uint64_t base_seed, std::uint64_t sample_id) {
    levels.validate();
    rng::SplitMix64 gen(rng::sample_seed(base_seed, sample_id));
    return levels.levels[gen.next_below(levels.levels.size())];
}

EventStream generate_signal_bar(const SensorGeometry& geometry, std::uint16_t bar_width,
                                double speed_px_per_s, Timestamp duration_us,
                                std::uint32_t events_per_crossing) {
    if (speed_px_per_s <= 0.0) throw std::invalid_argument("signal bar: speed must be > 0");
    if (bar_width == 0 || bar_width > geometry.width)
        throw std::invalid_argument("signal bar: bar wider than sensor");
    if (events_per_crossing == 0)
        throw std::invalid_argument("signal bar: events_per_crossing must be >= 1");
    if (duration_us < 0) throw std::invalid_argument("signal bar: duration must be >= 0");

    EventStream out;
    out.geometry = geometry;
    if (duration_us == 0) return out;

    // Rows hit by each crossing, fixed for the whole sweep.
    std::vector<std::uint16_t> rows(events_per_crossing);
    for (std::uint32_t j = 0; j < events_per_crossing; ++j)
        rows[j] = static_cast<std::uint16_t>(
            std::min<std::uint64_t>(geometry.height - 1,
                                    static_cast<std::uint64_t>((j + 0.5) * geometry.height /
                                                               events_per_crossing)));

    const double us_per_column = 1e6 / speed_px_per_s;
    for (std::uint64_t k = 0;; ++k) {
        const auto t = static_cast<Timestamp>(static_cast<double>(k) * us_per_column);
        if (t >= duration_us) break;
        const auto leading = static_cast<std::uint16_t>(k % geometry.width);
        for (std::uint16_t row : rows) out.events.push_back({t, leading, row, 1});
        if (k >= bar_width) {
            const auto trailing = static_cast<std::uint16_t>((k - bar_width) % geometry.width);
            for (std::uint16_t row : rows) out.events.push_back({t, trailing, row, -1});
        }
    }
    return out;
}

}  // namespace evpipe::noise
