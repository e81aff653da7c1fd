#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evpipe/event_model.hpp"

namespace evpipe::noise {

/// Shot-noise parameters. lambda is the per-pixel noise rate in Hz/px;
/// subdivision shrinks the Bernoulli step so the chain approximates a
/// Poisson process. The per-pixel step probability 1/(N*subdivision) must
/// stay at or below 0.01.
struct NoiseSpec {
    double lambda = 0.0;
    std::uint32_t subdivision = 10;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when the invariants do not hold for
    /// the given sensor size.
    void validate(const SensorGeometry& geometry) const;
};

/// Candidate noise intensities for the augmentation draw; may include 0.
struct LevelSet {
    std::vector<double> levels;

    /// Non-empty, all levels >= 0, duplicates forbidden.
    void validate() const;
};

/// The grid of intensities the evaluation sweeps over; also the default
/// augmentation level set.
const LevelSet& default_level_set();

struct TimeStep {
    double dt_seconds;          // 1 / (lambda * N * subdivision)
    double pixel_probability;   // lambda * dt = 1 / (N * subdivision)
};

/// Bernoulli step length for a target noise intensity.
/// Throws std::invalid_argument when lambda <= 0, N < 1 or D < 1
/// (lambda = 0 is handled by the generator, not here).
TimeStep compute_time_step(double lambda, std::uint64_t pixel_count, std::uint32_t subdivision);

/// Shot-noise stream over [0, duration_us). One Bernoulli trial per step
/// decides whether the whole sensor emits an event (probability
/// lambda * N * dt = 1/subdivision); the pixel is then drawn uniformly and
/// the polarity uniformly from {-1, +1}. Timestamps are floor(k * dt) in
/// microseconds, sorted by construction; a given seed always reproduces
/// the identical stream. lambda = 0 yields an empty stream.
EventStream generate_noise(const SensorGeometry& geometry, double lambda, Timestamp duration_us,
                           std::uint32_t subdivision, std::uint64_t seed);

/// Signal events keep their order and label Signal; generated noise is
/// merged in with label Noise. Noise covers [min t, max t] of the signal
/// unless an explicit window is given.
LabeledStream inject_noise(const EventStream& signal, const NoiseSpec& spec,
                           std::optional<WindowSpec> window = std::nullopt);

/// Mixes a slice of a real static-scene recording into the signal as
/// labelled noise. The slice starts `recording_offset_us` after the
/// recording begins, lasts for the target window, and is time-shifted so
/// it aligns with the window start; events outside the signal geometry
/// are cropped away. Throws std::invalid_argument when the recording is
/// shorter than the window.
LabeledStream mix_recorded_noise(const EventStream& signal, const EventStream& recording,
                                 const WindowSpec& target_window,
                                 Timestamp recording_offset_us = 0);

/// Uniform draw from the level set, a pure function of
/// (base_seed, sample_id).
double draw_noise_level(const LevelSet& levels, std::uint64_t base_seed, std::uint64_t sample_id);

/// Deterministic synthetic scene: a vertical bar of `bar_width` columns
/// sweeping right at `speed` px/s (wrapping around), emitting
/// events_per_crossing events per column crossing: +1 at the leading
/// edge, -1 at the trailing edge. The per-column bursts repeat on the
/// same rows, so the stream is temporally correlated the way moving-edge
/// signal is.
EventStream generate_signal_bar(const SensorGeometry& geometry, std::uint16_t bar_width,
                                double speed_px_per_s, Timestamp duration_us,
                                std::uint32_t events_per_crossing);

}  // namespace evpipe::noise
