#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace evpipe {

/// Dense float32 tensor in C (row-major) order; the exchange type between
/// the representation builders and the NPY exporter.
struct DenseTensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;
};

/// One voxel-aggregated event cluster. Positions are normalized to
/// [0, 1]^3, avg_polarity is the signed mean in [-1, 1].
struct GraphNode {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
    double avg_polarity = 0.0;
    std::uint32_t count = 0;

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

/// Undirected graph over voxel nodes. Edges are stored once with
/// src < dst, sorted ascending.
struct VoxelGraph {
    std::vector<GraphNode> nodes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

    friend bool operator==(const VoxelGraph&, const VoxelGraph&) = default;
};

}  // namespace evpipe
