#include "evpipe/filters.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "evpipe/eval.hpp"

namespace evpipe::filters {

namespace {

constexpr Timestamp kNever = std::numeric_limits<Timestamp>::min() / 2;

FilterDecision nn_filter_pass(const EventStream& stream, Timestamp window,
                              bool polarity_separate) {
    const std::size_t w = stream.geometry.width;
    const std::size_t h = stream.geometry.height;
    const std::size_t planes = polarity_separate ? 2 : 1;
    std::vector<Timestamp> last(planes * w * h, kNever);

    FilterDecision out;
    out.keep_mask.resize(stream.events.size());
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        const std::size_t plane = polarity_separate && e.p > 0 ? 1 : 0;
        Timestamp* map = last.data() + plane * w * h;

        const std::size_t x_lo = e.x > 0 ? e.x - 1u : 0u;
        const std::size_t x_hi = e.x + 1u < w ? e.x + 1u : w - 1;
        const std::size_t y_lo = e.y > 0 ? e.y - 1u : 0u;
        const std::size_t y_hi = e.y + 1u < h ? e.y + 1u : h - 1;
        bool keep = false;
        for (std::size_t y = y_lo; y <= y_hi && !keep; ++y) {
            const Timestamp* row = map + y * w;
            for (std::size_t x = x_lo; x <= x_hi; ++x) {
                if (e.t - row[x] <= window) {
                    keep = true;
                    break;
                }
            }
        }
        out.keep_mask[i] = keep ? 1 : 0;
        map[e.y * w + e.x] = e.t;
    }
    return out;
}

}  // namespace

FilterDecision nn_filter(const EventStream& stream, const NnParams& params) {
    if (params.temporal_window_us <= 0)
        throw std::invalid_argument("nn_filter: temporal window must be positive");
    return nn_filter_pass(stream, params.temporal_window_us, params.polarity_separate);
}

namespace {

// Per-subregion smoothing state; timestamps become fractional once the
// exponential update runs.
struct SubregionState {
    double last_ts = 0.0;
    double interval = 0.0;
    std::uint32_t count = 0;
};

}  // namespace

FilterDecision dif_filter(const EventStream& stream, const DifParams& params) {
    if (params.filter_length_us <= 0)
        throw std::invalid_argument("dif_filter: filter length must be positive");
    if (params.scale < 1 || params.scale > 8)
        throw std::invalid_argument("dif_filter: scale must be in [1, 8]");
    if (params.update_factor <= 0.0 || params.update_factor > 1.0)
        throw std::invalid_argument("dif_filter: update factor must be in (0, 1]");

    const std::uint32_t side = 1u << params.scale;
    const std::size_t cols = (stream.geometry.width + side - 1) / side;
    const std::size_t rows = (stream.geometry.height + side - 1) / side;
    std::vector<SubregionState> regions(cols * rows);

    // Centre of the nominal 2^scale block in pixel-centre coordinates.
    const double half = (side - 1) / 2.0;
    const double u = params.update_factor;
    const double threshold = static_cast<double>(params.filter_length_us);

    FilterDecision out;
    out.keep_mask.resize(stream.events.size());
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        const std::size_t cx = e.x / side;
        const std::size_t cy = e.y / side;
        SubregionState& own = regions[cy * cols + cx];

        bool keep;
        if (own.count < 2) {
            keep = true;  // interval undefined: warm-up
        } else {
            double weight_sum = 0.0;
            double expected_sum = 0.0;
            const std::size_t gx_lo = cx > 0 ? cx - 1 : 0;
            const std::size_t gx_hi = cx + 1 < cols ? cx + 1 : cols - 1;
            const std::size_t gy_lo = cy > 0 ? cy - 1 : 0;
            const std::size_t gy_hi = cy + 1 < rows ? cy + 1 : rows - 1;
            for (std::size_t gy = gy_lo; gy <= gy_hi; ++gy) {
                for (std::size_t gx = gx_lo; gx <= gx_hi; ++gx) {
                    const SubregionState& r = regions[gy * cols + gx];
                    if (r.count < 2) continue;
                    const double dx = e.x - (static_cast<double>(gx) * side + half);
                    const double dy = e.y - (static_cast<double>(gy) * side + half);
                    const double dist = std::sqrt(dx * dx + dy * dy);
                    const double weight = 1.0 / (dist + params.distance_epsilon);
                    weight_sum += weight;
                    expected_sum += weight * (r.last_ts + r.interval);
                }
            }
            const double expected = expected_sum / weight_sum;
            keep = std::abs(static_cast<double>(e.t) - expected) <= threshold;
        }
        out.keep_mask[i] = keep ? 1 : 0;

        // State update runs on every event, kept or not.
        const auto t = static_cast<double>(e.t);
        if (own.count == 0) {
            own.last_ts = t;
        } else {
            own.interval += u * ((t - own.last_ts) - own.interval);
            own.last_ts += u * (t - own.last_ts);
        }
        ++own.count;
    }
    return out;
}

std::vector<SweepPoint> sweep(FilterKind kind, const std::vector<Timestamp>& thresholds,
                              const LabeledStream& labeled) {
    if (thresholds.empty()) throw std::invalid_argument("sweep: threshold list must be non-empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] <= 0) throw std::invalid_argument("sweep: thresholds must be positive");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw std::invalid_argument("sweep: thresholds must be strictly increasing");
    }

    std::vector<SweepPoint> out;
    out.reserve(thresholds.size());
    for (Timestamp threshold : thresholds) {
        FilterDecision decision;
        if (kind == FilterKind::nn) {
            decision = nn_filter(labeled.stream, NnParams{threshold, false});
        } else {
            DifParams params;
            params.filter_length_us = threshold;
            decision = dif_filter(labeled.stream, params);
        }
        const eval::ConfusionReport report = eval::confusion(labeled, decision);
        out.push_back({static_cast<double>(threshold), report.tpr(), report.fpr()});
    }
    return out;
}

}  // namespace evpipe::filters
