#include "evpipe/event_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace evpipe {

ValidationReport validate(const EventStream& stream) {
    const auto& ev = stream.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const Event& e = ev[i];
        if (e.t < 0) return {false, i, "negative timestamp"};
        if (e.x >= stream.geometry.width) return {false, i, "x out of bounds"};
        if (e.y >= stream.geometry.height) return {false, i, "y out of bounds"};
        if (e.p != -1 && e.p != 1) return {false, i, "polarity not in {-1,+1}"};
        if (i > 0 && e.t < ev[i - 1].t) return {false, i, "timestamps not non-decreasing"};
    }
    return {};
}

namespace {

// Events are sorted by t, so the window is a contiguous run locatable by
// binary search.
std::pair<std::size_t, std::size_t> window_range(const std::vector<Event>& events,
                                                 Timestamp t0, Timestamp duration) {
    if (duration <= 0) throw std::invalid_argument("slice_window: duration must be positive");
    auto lo = std::lower_bound(events.begin(), events.end(), t0,
                               [](const Event& e, Timestamp t) { return e.t < t; });
    auto hi = std::lower_bound(lo, events.end(), t0 + duration,
                               [](const Event& e, Timestamp t) { return e.t < t; });
    return {static_cast<std::size_t>(lo - events.begin()),
            static_cast<std::size_t>(hi - events.begin())};
}

}  // namespace

EventStream slice_window(const EventStream& stream, Timestamp t0, Timestamp duration) {
    auto [lo, hi] = window_range(stream.events, t0, duration);
    EventStream out;
    out.geometry = stream.geometry;
    out.events.assign(stream.events.begin() + static_cast<std::ptrdiff_t>(lo),
                      stream.events.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

LabeledStream slice_window(const LabeledStream& labeled, Timestamp t0, Timestamp duration) {
    auto [lo, hi] = window_range(labeled.stream.events, t0, duration);
    LabeledStream out;
    out.stream.geometry = labeled.stream.geometry;
    out.stream.events.assign(labeled.stream.events.begin() + static_cast<std::ptrdiff_t>(lo),
                             labeled.stream.events.begin() + static_cast<std::ptrdiff_t>(hi));
    out.labels.assign(labeled.labels.begin() + static_cast<std::ptrdiff_t>(lo),
                      labeled.labels.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

LabeledStream merge(const LabeledStream& a, const LabeledStream& b) {
    if (!(a.stream.geometry == b.stream.geometry))
        throw std::invalid_argument("merge: geometry mismatch");

    LabeledStream out;
    out.stream.geometry = a.stream.geometry;
    out.stream.events.reserve(a.size() + b.size());
    out.labels.reserve(a.size() + b.size());

    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        // a wins ties so merged output is stable with respect to the
        // argument order.
        if (b.stream.events[j].t < a.stream.events[i].t) {
            out.stream.events.push_back(b.stream.events[j]);
            out.labels.push_back(b.labels[j]);
            ++j;
        } else {
            out.stream.events.push_back(a.stream.events[i]);
            out.labels.push_back(a.labels[i]);
            ++i;
        }
    }
    for (; i < a.size(); ++i) {
        out.stream.events.push_back(a.stream.events[i]);
        out.labels.push_back(a.labels[i]);
    }
    for (; j < b.size(); ++j) {
        out.stream.events.push_back(b.stream.events[j]);
        out.labels.push_back(b.labels[j]);
    }
    return out;
}

LabeledStream label_all(EventStream stream, EventLabel label) {
    LabeledStream out;
    out.labels.assign(stream.events.size(), label);
    out.stream = std::move(stream);
    return out;
}

}  // namespace evpipe
