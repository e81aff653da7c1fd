#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evpipe {

/// Event timestamps are integer microseconds. All temporal arithmetic in
/// the toolkit is exact integer arithmetic; seconds appear only at the
/// boundaries (rates, benchmark clocks).
using Timestamp = std::int64_t;

/// One sensor event. Polarity is stored as -1/+1 so polarity averages are
/// signed means in [-1, 1].
struct Event {
    Timestamp t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1;

    friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
    std::uint16_t width = 0;
    std::uint16_t height = 0;

    std::uint32_t pixel_count() const {
        return static_cast<std::uint32_t>(width) * static_cast<std::uint32_t>(height);
    }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// Time-ordered event sequence bound to a sensor geometry. Events are
/// sorted by t (non-decreasing); ties keep insertion order.
struct EventStream {
    SensorGeometry geometry;
    std::vector<Event> events;

    bool empty() const { return events.empty(); }
    std::size_t size() const { return events.size(); }

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

enum class EventLabel : std::uint8_t {
    signal = 0,
    noise = 1,
};

/// EventStream plus per-event signal/noise provenance, the ground truth
/// for filter scoring. labels.size() always equals stream.size().
struct LabeledStream {
    EventStream stream;
    std::vector<EventLabel> labels;

    bool empty() const { return stream.empty(); }
    std::size_t size() const { return stream.size(); }

    friend bool operator==(const LabeledStream&, const LabeledStream&) = default;
};

/// Half-open temporal window [t0, t0 + duration) split into time_bins
/// equal bins. Adjacent windows partition a stream without double counting.
struct WindowSpec {
    Timestamp t0 = 0;
    Timestamp duration = 0;
    int time_bins = 1;

    Timestamp end() const { return t0 + duration; }
};

struct ValidationReport {
    bool ok = true;
    std::size_t index = 0;    // first offending event when !ok
    std::string violation;    // which invariant failed

    explicit operator bool() const { return ok; }
};

/// Checks the EventStream invariants (bounds, polarity, ordering) and
/// reports the first violation instead of failing.
ValidationReport validate(const EventStream& stream);

/// Events with t0 <= t < t0 + duration, order preserved.
/// Throws std::invalid_argument when duration <= 0.
EventStream slice_window(const EventStream& stream, Timestamp t0, Timestamp duration);

/// Label-preserving slice of a labeled stream, same window semantics.
LabeledStream slice_window(const LabeledStream& labeled, Timestamp t0, Timestamp duration);

/// Stable ordered merge; ties between a-events and b-events resolve
/// a-first. Throws std::invalid_argument on geometry mismatch.
LabeledStream merge(const LabeledStream& a, const LabeledStream& b);

/// Wraps a plain stream with a uniform label.
LabeledStream label_all(EventStream stream, EventLabel label);

}  // namespace evpipe
