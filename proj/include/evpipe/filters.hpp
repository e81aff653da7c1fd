#pragma once

#include <cstdint>
#include <vector>

#include "evpipe/event_model.hpp"

namespace evpipe::filters {

/// Per-event keep/remove verdict aligned with the input stream, so
/// provenance labels survive filtering without re-matching events.
struct FilterDecision {
    std::vector<std::uint8_t> keep_mask;

    std::size_t kept_count() const {
        std::size_t n = 0;
        for (std::uint8_t k : keep_mask) n += k;
        return n;
    }
};

struct NnParams {
    Timestamp temporal_window_us = 10000;
    /// When set, events only support events of the same polarity.
    bool polarity_separate = false;
};

struct DifParams {
    Timestamp filter_length_us = 15000;
    std::uint32_t scale = 4;         // subregion side = 2^scale pixels
    double update_factor = 0.5;      // exponential smoothing factor in (0, 1]
    double distance_epsilon = 0.5;   // added to the centre distance in the weights
};

/// Nearest-neighbour background-activity filter. One causal forward pass
/// over a per-pixel most-recent-timestamp map: an event is kept iff some
/// pixel of the 3x3 neighbourhood centred on it (itself included) saw an
/// earlier event within temporal_window_us. The map is updated after each
/// decision, so every event is judged against strictly earlier events
/// only.
FilterDecision nn_filter(const EventStream& stream, const NnParams& params);

/// Distance-based interpolation filter. The sensor is split into square
/// subregions of side 2^scale; each keeps an exponentially smoothed last
/// timestamp and inter-event interval. An event's expected timestamp is
/// interpolated over its own subregion and the 8 surrounding ones with
/// weights 1/(distance to centre + epsilon), skipping subregions that
/// have seen fewer than two events. The event is kept iff
/// |t - expected| <= filter_length_us, or unconditionally while its own
/// subregion is still warming up (fewer than two prior events).
FilterDecision dif_filter(const EventStream& stream, const DifParams& params);

enum class FilterKind { nn, dif };

struct SweepPoint {
    double threshold_us;
    double tpr;
    double fpr;
};

/// TPR/FPR per threshold; the threshold is the NN temporal window or the
/// DIF filter length. Thresholds must be positive and strictly
/// increasing; throws std::invalid_argument otherwise.
std::vector<SweepPoint> sweep(FilterKind kind, const std::vector<Timestamp>& thresholds,
                              const LabeledStream& labeled);

}  // namespace evpipe::filters
