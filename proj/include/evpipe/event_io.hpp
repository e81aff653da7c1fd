#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evpipe/event_model.hpp"
#include "evpipe/repr_types.hpp"

namespace evpipe::io {

/// Malformed input bytes; message carries the byte offset or record index.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- ATIS .bin (N-Caltech101 family) ---------------------------------------
//
// 5 bytes per event: byte0 = x, byte1 = y, byte2 bit7 = polarity
// (1 = positive), byte2 bits6-0 | byte3 | byte4 = 23-bit timestamp in us.
// Timestamps wrap at 2^23 us; the reader unwraps whenever the raw value
// drops by more than 2^22.

/// Decode an ATIS .bin buffer. When no geometry is given it defaults to
/// (max x + 1, max y + 1), at least 1x1. Throws FormatError on a
/// truncated record.
EventStream read_atis_bin(const std::vector<std::uint8_t>& bytes,
                          std::optional<SensorGeometry> geometry = std::nullopt);

/// Encode a stream as ATIS .bin. Requires x, y < 256 and gaps between
/// consecutive events below 2^22 us so every timestamp wrap stays
/// detectable; throws std::out_of_range naming the first offending event.
std::vector<std::uint8_t> write_atis_bin(const EventStream& stream);

// --- EVS (labelled binary container) ----------------------------------------
//
// Header: magic "EVS1", width u16 LE, height u16 LE, count u64 LE.
// Record (14 bytes): t u64 LE, x u16 LE, y u16 LE, p i8 (-1/+1),
// label u8 (0 = signal, 1 = noise, 255 = unlabeled).

struct EvsContents {
    EventStream stream;
    std::optional<std::vector<EventLabel>> labels;  // nullopt when unlabeled

    LabeledStream to_labeled() const;
};

EvsContents read_evs(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> write_evs(const LabeledStream& labeled);
std::vector<std::uint8_t> write_evs_unlabeled(const EventStream& stream);

// --- CSV ---------------------------------------------------------------------
//
// One "t,x,y,p" line per event, '\n' endings, optional "t,x,y,p" header.

EventStream read_csv(const std::string& text, std::optional<SensorGeometry> geometry = std::nullopt);
std::string write_csv(const EventStream& stream, bool header = false);

// --- NPY (v1.0, little-endian float32, C order) -----------------------------

/// Serialize a dense float32 tensor as an NPY v1.0 file. The header dict
/// is space-padded so the whole preamble is a multiple of 64 bytes and
/// ends in a newline. Shape must be non-empty.
std::vector<std::uint8_t> write_npy(const DenseTensor& tensor);

// --- Voxel graph CSV pair -----------------------------------------------------

struct GraphFiles {
    std::string nodes_csv;  // "id,x,y,t,avg_p,count"
    std::string edges_csv;  // "src,dst", src < dst, each undirected edge once
};

GraphFiles write_graph(const VoxelGraph& graph);
VoxelGraph read_graph(const std::string& nodes_csv, const std::string& edges_csv);

// --- file helpers --------------------------------------------------------------

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Write through a temp file in the target directory and rename into
/// place, so interrupted runs never leave torn outputs.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace evpipe::io
