#pragma once

#include <cstdint>
#include <optional>

#include "evpipe/event_model.hpp"
#include "evpipe/repr_types.hpp"

namespace evpipe::repr {

/// Per-polarity event-count histogram over a time window.
/// Shape (2, H, W); channel 0 counts negative events, channel 1 positive.
DenseTensor event_count_image(const EventStream& stream, const WindowSpec& window);

/// Count image split into T temporal bins, shape (2T, H, W) with channel
/// layout [bin0 neg, bin0 pos, bin1 neg, ...]. Summing each polarity over
/// the bins reproduces event_count_image exactly.
DenseTensor voxel_grid(const EventStream& stream, const WindowSpec& window);

/// Same numbers as voxel_grid in (T, 2, H, W) layout.
DenseTensor event_spike_tensor(const EventStream& stream, const WindowSpec& window);

struct VoxelGraphParams {
    std::uint32_t voxels_x = 1;
    std::uint32_t voxels_y = 1;
    std::uint32_t voxels_t = 1;
    double radius = 0.02;           // edge search radius in normalized coordinates
    std::uint32_t max_neighbors = 16;
};

/// Voxelised spatio-temporal graph. Events are normalized to [0, 1]^3
/// (x/(W-1), y/(H-1), (t-t0)/duration; degenerate axes map to 0), grouped
/// per voxel into one node carrying the mean position, mean polarity and
/// event count. Nodes within `radius` are linked; when a node has more
/// than max_neighbors candidates only the nearest max_neighbors survive
/// (ties to the smaller node id) and edges are kept only when both
/// endpoints selected each other, so the degree cap holds everywhere.
VoxelGraph voxel_graph(const EventStream& stream, const WindowSpec& window,
                       const VoxelGraphParams& params);

/// Horizontal flip: x -> W-1-x. Involution.
EventStream hflip(const EventStream& stream);

/// Shift coordinates by (dx, dy); events leaving the sensor are dropped.
EventStream translate(const EventStream& stream, int dx, int dy);

/// Keep events inside the rectangle, rebase coordinates to its origin and
/// shrink the geometry to (w, h). Throws std::invalid_argument when the
/// rectangle is empty or not fully inside the sensor.
EventStream crop(const EventStream& stream, std::uint16_t x0, std::uint16_t y0,
                 std::uint16_t w, std::uint16_t h);

struct TransformPolicyConfig {
    double flip_probability = 0.5;
    double max_translate_fraction = 0.1;   // uniform in +-fraction of each dimension
    double crop_scale_min = 0.8;
    double crop_scale_max = 1.0;
};

/// A concrete draw of the random policy: geometry-free parameters that
/// apply to any stream. Applied as flip, then crop, then translate.
struct SampledTransform {
    bool flip = false;
    double crop_scale = 1.0;
    double crop_origin_fx = 0.0;   // fractional position of the crop origin
    double crop_origin_fy = 0.0;
    double translate_fx = 0.0;     // signed fraction of the (cropped) dimensions
    double translate_fy = 0.0;

    EventStream apply(const EventStream& stream) const;
    /// Same transform with labels following their events through drops.
    LabeledStream apply(const LabeledStream& labeled) const;
};

/// Deterministic function of (base_seed, sample_id): same inputs, same
/// transform.
SampledTransform random_transform_policy(std::uint64_t base_seed, std::uint64_t sample_id,
                                         const TransformPolicyConfig& config);

}  // namespace evpipe::repr
