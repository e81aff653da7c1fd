#include "evpipe/representations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "evpipe/rng.hpp"

namespace evpipe::repr {

namespace {

void check_window(const WindowSpec& window) {
    if (window.duration <= 0)
        throw std::invalid_argument("representation window duration must be positive");
    if (window.time_bins < 1)
        throw std::invalid_argument("representation window needs at least one time bin");
}

// Temporal bin by exact integer arithmetic: floor((t - t0) * T / duration).
std::size_t bin_index(Timestamp t, const WindowSpec& window) {
    const auto offset = static_cast<std::int64_t>(t - window.t0);
    return static_cast<std::size_t>(offset * window.time_bins / window.duration);
}

}  // namespace

DenseTensor event_count_image(const EventStream& stream, const WindowSpec& window) {
    check_window(window);
    const std::size_t h = stream.geometry.height;
    const std::size_t w = stream.geometry.width;
    DenseTensor out;
    out.shape = {2, h, w};
    out.data.assign(2 * h * w, 0.0f);
    for (const Event& e : stream.events) {
        if (e.t < window.t0 || e.t >= window.end()) continue;
        const std::size_t pol = e.p > 0 ? 1 : 0;
        out.data[(pol * h + e.y) * w + e.x] += 1.0f;
    }
    return out;
}

DenseTensor voxel_grid(const EventStream& stream, const WindowSpec& window) {
    check_window(window);
    const std::size_t h = stream.geometry.height;
    const std::size_t w = stream.geometry.width;
    const std::size_t t_bins = static_cast<std::size_t>(window.time_bins);
    DenseTensor out;
    out.shape = {2 * t_bins, h, w};
    out.data.assign(2 * t_bins * h * w, 0.0f);
    for (const Event& e : stream.events) {
        if (e.t < window.t0 || e.t >= window.end()) continue;
        const std::size_t pol = e.p > 0 ? 1 : 0;
        const std::size_t channel = 2 * bin_index(e.t, window) + pol;
        out.data[(channel * h + e.y) * w + e.x] += 1.0f;
    }
    return out;
}

DenseTensor event_spike_tensor(const EventStream& stream, const WindowSpec& window) {
    check_window(window);
    const std::size_t h = stream.geometry.height;
    const std::size_t w = stream.geometry.width;
    const std::size_t t_bins = static_cast<std::size_t>(window.time_bins);
    DenseTensor out;
    out.shape = {t_bins, 2, h, w};
    out.data.assign(t_bins * 2 * h * w, 0.0f);
    for (const Event& e : stream.events) {
        if (e.t < window.t0 || e.t >= window.end()) continue;
        const std::size_t pol = e.p > 0 ? 1 : 0;
        const std::size_t bin = bin_index(e.t, window);
        out.data[((bin * 2 + pol) * h + e.y) * w + e.x] += 1.0f;
    }
    return out;
}

namespace {

struct VoxelAccumulator {
    double sum_x = 0.0, sum_y = 0.0, sum_t = 0.0;
    double sum_p = 0.0;
    std::uint32_t count = 0;
};

double squared_distance(const GraphNode& a, const GraphNode& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dt = a.t - b.t;
    return dx * dx + dy * dy + dt * dt;
}

}  // namespace

VoxelGraph voxel_graph(const EventStream& stream, const WindowSpec& window,
                       const VoxelGraphParams& params) {
    check_window(window);
    if (params.voxels_x < 1 || params.voxels_y < 1 || params.voxels_t < 1)
        throw std::invalid_argument("voxel_graph: voxel counts must be >= 1");

    const double w_span = stream.geometry.width > 1 ? stream.geometry.width - 1.0 : 0.0;
    const double h_span = stream.geometry.height > 1 ? stream.geometry.height - 1.0 : 0.0;
    const double dur = static_cast<double>(window.duration);

    // Voxelise: one accumulator per non-empty voxel, keyed by the linear
    // voxel index (t-major) so node emission order is deterministic.
    std::map<std::uint64_t, VoxelAccumulator> voxels;
    for (const Event& e : stream.events) {
        if (e.t < window.t0 || e.t >= window.end()) continue;
        const double nx = w_span > 0.0 ? e.x / w_span : 0.0;
        const double ny = h_span > 0.0 ? e.y / h_span : 0.0;
        const double nt = static_cast<double>(e.t - window.t0) / dur;
        const auto ix = std::min<std::uint64_t>(params.voxels_x - 1,
                                                static_cast<std::uint64_t>(nx * params.voxels_x));
        const auto iy = std::min<std::uint64_t>(params.voxels_y - 1,
                                                static_cast<std::uint64_t>(ny * params.voxels_y));
        const auto it = std::min<std::uint64_t>(params.voxels_t - 1,
                                                static_cast<std::uint64_t>(nt * params.voxels_t));
        const std::uint64_t key = (it * params.voxels_y + iy) * params.voxels_x + ix;
        VoxelAccumulator& acc = voxels[key];
        acc.sum_x += nx;
        acc.sum_y += ny;
        acc.sum_t += nt;
        acc.sum_p += e.p;
        acc.count += 1;
    }

    VoxelGraph graph;
    graph.nodes.reserve(voxels.size());
    for (const auto& [key, acc] : voxels) {
        (void)key;
        GraphNode node;
        node.x = acc.sum_x / acc.count;
        node.y = acc.sum_y / acc.count;
        node.t = acc.sum_t / acc.count;
        node.avg_polarity = acc.sum_p / acc.count;
        node.count = acc.count;
        graph.nodes.push_back(node);
    }

    const std::size_t n = graph.nodes.size();
    if (n < 2) return graph;

    // Radius search over a uniform grid with cell size = radius; node
    // positions live in [0,1]^3 so candidates sit in the 27 surrounding
    // cells.
    const double cell = params.radius > 0.0 ? params.radius : 1.0;
    const auto cells_per_axis = static_cast<std::int64_t>(std::floor(1.0 / cell)) + 1;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
    auto cell_of = [&](double v) {
        auto c = static_cast<std::int64_t>(std::floor(v / cell));
        return std::clamp<std::int64_t>(c, 0, cells_per_axis - 1);
    };
    auto cell_key = [&](std::int64_t cx, std::int64_t cy, std::int64_t ct) {
        return static_cast<std::uint64_t>((ct * cells_per_axis + cy) * cells_per_axis + cx);
    };
    for (std::uint32_t i = 0; i < n; ++i) {
        const GraphNode& node = graph.nodes[i];
        grid[cell_key(cell_of(node.x), cell_of(node.y), cell_of(node.t))].push_back(i);
    }

    const double radius_sq = params.radius * params.radius;
    struct Candidate {
        double dist_sq;
        std::uint32_t id;
    };
    std::vector<std::vector<std::uint32_t>> selected(n);
    std::vector<Candidate> candidates;
    for (std::uint32_t i = 0; i < n; ++i) {
        const GraphNode& node = graph.nodes[i];
        candidates.clear();
        const std::int64_t cx = cell_of(node.x), cy = cell_of(node.y), ct = cell_of(node.t);
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    const std::int64_t gx = cx + dx, gy = cy + dy, gz = ct + dz;
                    if (gx < 0 || gy < 0 || gz < 0 || gx >= cells_per_axis ||
                        gy >= cells_per_axis || gz >= cells_per_axis)
                        continue;
                    auto bucket = grid.find(cell_key(gx, gy, gz));
                    if (bucket == grid.end()) continue;
                    for (std::uint32_t j : bucket->second) {
                        if (j == i) continue;
                        const double d2 = squared_distance(node, graph.nodes[j]);
                        if (d2 <= radius_sq) candidates.push_back({d2, j});
                    }
                }
            }
        }
        std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
            return a.id < b.id;
        });
        if (candidates.size() > params.max_neighbors) candidates.resize(params.max_neighbors);
        selected[i].reserve(candidates.size());
        for (const Candidate& c : candidates) selected[i].push_back(c.id);
    }

    // Mutual selection keeps the cap valid for both endpoints.
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j : selected[i]) {
            if (j <= i) continue;
            if (std::find(selected[j].begin(), selected[j].end(), i) != selected[j].end())
                graph.edges.emplace_back(i, j);
        }
    }
    std::sort(graph.edges.begin(), graph.edges.end());
    return graph;
}

EventStream hflip(const EventStream& stream) {
    EventStream out = stream;
    const std::uint16_t w = stream.geometry.width;
    for (Event& e : out.events) e.x = static_cast<std::uint16_t>(w - 1 - e.x);
    return out;
}

EventStream translate(const EventStream& stream, int dx, int dy) {
    EventStream out;
    out.geometry = stream.geometry;
    out.events.reserve(stream.events.size());
    for (const Event& e : stream.events) {
        const int nx = static_cast<int>(e.x) + dx;
        const int ny = static_cast<int>(e.y) + dy;
        if (nx < 0 || ny < 0 || nx >= stream.geometry.width || ny >= stream.geometry.height)
            continue;
        Event moved = e;
        moved.x = static_cast<std::uint16_t>(nx);
        moved.y = static_cast<std::uint16_t>(ny);
        out.events.push_back(moved);
    }
    return out;
}

EventStream crop(const EventStream& stream, std::uint16_t x0, std::uint16_t y0,
                 std::uint16_t w, std::uint16_t h) {
    if (w == 0 || h == 0 || x0 + w > stream.geometry.width || y0 + h > stream.geometry.height)
        throw std::invalid_argument("crop: rectangle not inside sensor");
    EventStream out;
    out.geometry = {w, h};
    out.events.reserve(stream.events.size());
    for (const Event& e : stream.events) {
        if (e.x < x0 || e.y < y0 || e.x >= x0 + w || e.y >= y0 + h) continue;
        Event moved = e;
        moved.x = static_cast<std::uint16_t>(e.x - x0);
        moved.y = static_cast<std::uint16_t>(e.y - y0);
        out.events.push_back(moved);
    }
    return out;
}

namespace {

// Flip, crop and translate resolved against a concrete geometry into one
// per-event map, so the plain and the labeled overloads share the exact
// same drop decisions.
struct ResolvedTransform {
    bool flip;
    std::uint16_t full_w, crop_w, crop_h, crop_x0, crop_y0;
    int dx, dy;

    bool map(Event& e) const {
        if (flip) e.x = static_cast<std::uint16_t>(full_w - 1 - e.x);
        if (e.x < crop_x0 || e.y < crop_y0 || e.x >= crop_x0 + crop_w || e.y >= crop_y0 + crop_h)
            return false;
        const int tx = e.x - crop_x0 + dx;
        const int ty = e.y - crop_y0 + dy;
        if (tx < 0 || ty < 0 || tx >= crop_w || ty >= crop_h) return false;
        e.x = static_cast<std::uint16_t>(tx);
        e.y = static_cast<std::uint16_t>(ty);
        return true;
    }
};

ResolvedTransform resolve(const SampledTransform& t, const SensorGeometry& geometry) {
    ResolvedTransform r;
    r.flip = t.flip;
    r.full_w = geometry.width;
    r.crop_w = static_cast<std::uint16_t>(std::clamp<long>(
        std::lround(geometry.width * t.crop_scale), 1L, static_cast<long>(geometry.width)));
    r.crop_h = static_cast<std::uint16_t>(std::clamp<long>(
        std::lround(geometry.height * t.crop_scale), 1L, static_cast<long>(geometry.height)));
    r.crop_x0 = static_cast<std::uint16_t>(std::lround(t.crop_origin_fx * (geometry.width - r.crop_w)));
    r.crop_y0 = static_cast<std::uint16_t>(std::lround(t.crop_origin_fy * (geometry.height - r.crop_h)));
    r.dx = static_cast<int>(std::lround(t.translate_fx * r.crop_w));
    r.dy = static_cast<int>(std::lround(t.translate_fy * r.crop_h));
    return r;
}

}  // namespace

EventStream SampledTransform::apply(const EventStream& stream) const {
    const ResolvedTransform r = resolve(*this, stream.geometry);
    EventStream out;
    out.geometry = {r.crop_w, r.crop_h};
    out.events.reserve(stream.events.size());
    for (Event e : stream.events)
        if (r.map(e)) out.events.push_back(e);
    return out;
}

LabeledStream SampledTransform::apply(const LabeledStream& labeled) const {
    const ResolvedTransform r = resolve(*this, labeled.stream.geometry);
    LabeledStream out;
    out.stream.geometry = {r.crop_w, r.crop_h};
    out.stream.events.reserve(labeled.stream.events.size());
    out.labels.reserve(labeled.labels.size());
    for (std::size_t i = 0; i < labeled.stream.events.size(); ++i) {
        Event e = labeled.stream.events[i];
        if (!r.map(e)) continue;
        out.stream.events.push_back(e);
        out.labels.push_back(labeled.labels[i]);
    }
    return out;
}

SampledTransform random_transform_policy(std::uint64_t base_seed, std::uint64_t sample_id,
                                         const TransformPolicyConfig& config) {
    rng::SplitMix64 gen(rng::splitmix64(rng::sample_seed(base_seed, sample_id) ^
                                        rng::kTransformSalt));
    SampledTransform t;
    // Fixed draw order; every parameter is drawn even when its range is
    // degenerate so configs only change the values, not the stream.
    t.flip = gen.next_double() < config.flip_probability;
    t.crop_scale = config.crop_scale_min +
                   gen.next_double() * (config.crop_scale_max - config.crop_scale_min);
    t.crop_origin_fx = gen.next_double();
    t.crop_origin_fy = gen.next_double();
    t.translate_fx = (2.0 * gen.next_double() - 1.0) * config.max_translate_fraction;
    t.translate_fy = (2.0 * gen.next_double() - 1.0) * config.max_translate_fraction;
    return t;
}

}  // namespace evpipe::repr
