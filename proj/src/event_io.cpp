#include "evpipe/event_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace evpipe::io {

namespace {

constexpr std::int64_t kAtisWrapPeriod = 1 << 23;       // 23-bit timestamp field
constexpr std::int64_t kAtisWrapThreshold = 1 << 22;    // raw drop that signals a wrap

void append_u16_le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint16_t load_u16_le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t load_u64_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

EventStream read_atis_bin(const std::vector<std::uint8_t>& bytes,
                          std::optional<SensorGeometry> geometry) {
    if (bytes.size() % 5 != 0)
        throw FormatError("atis: truncated record at byte offset " +
                          std::to_string(bytes.size() - bytes.size() % 5));

    EventStream out;
    out.events.reserve(bytes.size() / 5);
    std::int64_t wraps = 0;
    std::int64_t prev_raw = -1;
    std::uint16_t max_x = 0, max_y = 0;
    for (std::size_t off = 0; off < bytes.size(); off += 5) {
        const std::uint8_t* r = bytes.data() + off;
        Event e;
        e.x = r[0];
        e.y = r[1];
        e.p = (r[2] & 0x80) ? 1 : -1;
        const std::int64_t raw =
            (static_cast<std::int64_t>(r[2] & 0x7F) << 16) | (static_cast<std::int64_t>(r[3]) << 8) | r[4];
        if (prev_raw >= 0 && prev_raw - raw > kAtisWrapThreshold) ++wraps;
        prev_raw = raw;
        e.t = raw + wraps * kAtisWrapPeriod;
        max_x = std::max(max_x, static_cast<std::uint16_t>(e.x));
        max_y = std::max(max_y, static_cast<std::uint16_t>(e.y));
        out.events.push_back(e);
    }
    if (geometry) {
        out.geometry = *geometry;
    } else {
        out.geometry.width = static_cast<std::uint16_t>(out.events.empty() ? 1 : max_x + 1);
        out.geometry.height = static_cast<std::uint16_t>(out.events.empty() ? 1 : max_y + 1);
    }
    return out;
}

std::vector<std::uint8_t> write_atis_bin(const EventStream& stream) {
    std::vector<std::uint8_t> out;
    out.reserve(stream.events.size() * 5);
    Timestamp prev_t = -1;
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        if (e.x > 0xFF || e.y > 0xFF)
            throw std::out_of_range("atis: coordinate exceeds 8 bits at event " + std::to_string(i));
        if (e.t < 0) throw std::out_of_range("atis: negative timestamp at event " + std::to_string(i));
        // Wraps are encoded implicitly as t mod 2^23; they stay decodable
        // only while consecutive gaps are below the wrap threshold.
        if (prev_t >= 0 && e.t - prev_t >= kAtisWrapThreshold)
            throw std::out_of_range("atis: timestamp gap >= 2^22 us at event " + std::to_string(i));
        prev_t = e.t;
        const auto raw = static_cast<std::uint32_t>(e.t % kAtisWrapPeriod);
        out.push_back(static_cast<std::uint8_t>(e.x));
        out.push_back(static_cast<std::uint8_t>(e.y));
        out.push_back(static_cast<std::uint8_t>(((e.p > 0) ? 0x80 : 0x00) | ((raw >> 16) & 0x7F)));
        out.push_back(static_cast<std::uint8_t>((raw >> 8) & 0xFF));
        out.push_back(static_cast<std::uint8_t>(raw & 0xFF));
    }
    return out;
}

LabeledStream EvsContents::to_labeled() const {
    LabeledStream out;
    out.stream = stream;
    if (labels)
        out.labels = *labels;
    else
        out.labels.assign(stream.events.size(), EventLabel::signal);
    return out;
}

namespace {

constexpr std::array<std::uint8_t, 4> kEvsMagic = {'E', 'V', 'S', '1'};
constexpr std::size_t kEvsHeaderSize = 16;
constexpr std::size_t kEvsRecordSize = 14;
constexpr std::uint8_t kEvsUnlabeled = 255;

std::vector<std::uint8_t> write_evs_impl(const EventStream& stream,
                                         const std::vector<EventLabel>* labels) {
    std::vector<std::uint8_t> out;
    out.reserve(kEvsHeaderSize + stream.events.size() * kEvsRecordSize);
    out.insert(out.end(), kEvsMagic.begin(), kEvsMagic.end());
    append_u16_le(out, stream.geometry.width);
    append_u16_le(out, stream.geometry.height);
    append_u64_le(out, stream.events.size());
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        append_u64_le(out, static_cast<std::uint64_t>(e.t));
        append_u16_le(out, e.x);
        append_u16_le(out, e.y);
        out.push_back(static_cast<std::uint8_t>(e.p));
        out.push_back(labels ? static_cast<std::uint8_t>((*labels)[i]) : kEvsUnlabeled);
    }
    return out;
}

}  // namespace

EvsContents read_evs(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kEvsHeaderSize) throw FormatError("evs: file shorter than header");
    if (!std::equal(kEvsMagic.begin(), kEvsMagic.end(), bytes.begin()))
        throw FormatError("evs: bad magic");

    EvsContents out;
    out.stream.geometry.width = load_u16_le(bytes.data() + 4);
    out.stream.geometry.height = load_u16_le(bytes.data() + 6);
    const std::uint64_t count = load_u64_le(bytes.data() + 8);
    if (bytes.size() != kEvsHeaderSize + count * kEvsRecordSize)
        throw FormatError("evs: size does not match record count " + std::to_string(count));

    out.stream.events.reserve(count);
    std::vector<EventLabel> labels;
    labels.reserve(count);
    std::size_t labeled = 0, unlabeled = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint8_t* r = bytes.data() + kEvsHeaderSize + i * kEvsRecordSize;
        Event e;
        e.t = static_cast<Timestamp>(load_u64_le(r));
        e.x = load_u16_le(r + 8);
        e.y = load_u16_le(r + 10);
        e.p = static_cast<std::int8_t>(r[12]);
        if (e.p != -1 && e.p != 1)
            throw FormatError("evs: bad polarity in record " + std::to_string(i));
        if (!out.stream.events.empty() && e.t < out.stream.events.back().t)
            throw FormatError("evs: timestamps not sorted at record " + std::to_string(i));
        const std::uint8_t label = r[13];
        if (label == kEvsUnlabeled) {
            ++unlabeled;
        } else if (label == 0 || label == 1) {
            ++labeled;
            labels.push_back(static_cast<EventLabel>(label));
        } else {
            throw FormatError("evs: bad label in record " + std::to_string(i));
        }
        out.stream.events.push_back(e);
    }
    if (labeled > 0 && unlabeled > 0)
        throw FormatError("evs: mixed labeled and unlabeled records");
    if (labeled > 0) out.labels = std::move(labels);
    return out;
}

std::vector<std::uint8_t> write_evs(const LabeledStream& labeled) {
    if (labeled.labels.size() != labeled.stream.events.size())
        throw std::invalid_argument("evs: label count does not match event count");
    return write_evs_impl(labeled.stream, &labeled.labels);
}

std::vector<std::uint8_t> write_evs_unlabeled(const EventStream& stream) {
    return write_evs_impl(stream, nullptr);
}

EventStream read_csv(const std::string& text, std::optional<SensorGeometry> geometry) {
    EventStream out;
    std::uint16_t max_x = 0, max_y = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line == "t,x,y,p") continue;  // optional header

        long long fields[4];
        std::size_t field = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= 4)
                    throw FormatError("csv: too many fields on line " + std::to_string(line_no));
                const auto* first = line.data() + start;
                const auto* last = line.data() + i;
                auto [ptr, ec] = std::from_chars(first, last, fields[field]);
                if (ec != std::errc() || ptr != last)
                    throw FormatError("csv: bad integer on line " + std::to_string(line_no));
                ++field;
                start = i + 1;
            }
        }
        if (field != 4) throw FormatError("csv: expected 4 fields on line " + std::to_string(line_no));
        if (fields[3] != 1 && fields[3] != -1)
            throw FormatError("csv: polarity must be 1 or -1 on line " + std::to_string(line_no));
        if (fields[0] < 0 || fields[1] < 0 || fields[1] > 0xFFFF || fields[2] < 0 ||
            fields[2] > 0xFFFF)
            throw FormatError("csv: field out of range on line " + std::to_string(line_no));
        Event e;
        e.t = fields[0];
        e.x = static_cast<std::uint16_t>(fields[1]);
        e.y = static_cast<std::uint16_t>(fields[2]);
        e.p = static_cast<std::int8_t>(fields[3]);
        max_x = std::max(max_x, e.x);
        max_y = std::max(max_y, e.y);
        out.events.push_back(e);
    }
    if (geometry) {
        out.geometry = *geometry;
    } else {
        out.geometry.width = static_cast<std::uint16_t>(out.events.empty() ? 1 : max_x + 1);
        out.geometry.height = static_cast<std::uint16_t>(out.events.empty() ? 1 : max_y + 1);
    }
    return out;
}

std::string write_csv(const EventStream& stream, bool header) {
    std::string out;
    out.reserve(stream.events.size() * 16);
    if (header) out += "t,x,y,p\n";
    char buf[64];
    for (const Event& e : stream.events) {
        const int n = std::snprintf(buf, sizeof buf, "%lld,%u,%u,%d\n",
                                    static_cast<long long>(e.t), e.x, e.y, e.p);
        out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
}

std::vector<std::uint8_t> write_npy(const DenseTensor& tensor) {
    if (tensor.shape.empty()) throw std::invalid_argument("npy: shape must be non-empty");
    if (tensor.data.size() != tensor.element_count())
        throw std::invalid_argument("npy: data size does not match shape");

    std::string shape = "(";
    for (std::size_t i = 0; i < tensor.shape.size(); ++i) {
        shape += std::to_string(tensor.shape[i]);
        if (i + 1 < tensor.shape.size()) shape += ", ";
    }
    if (tensor.shape.size() == 1) shape += ",";
    shape += ")";

    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape + ", }";
    // magic(6) + version(2) + header length(2) + dict, padded to 64.
    const std::size_t preamble = 10;
    std::size_t total = preamble + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header += '\n';

    std::vector<std::uint8_t> out;
    out.reserve(preamble + header.size() + tensor.data.size() * 4);
    const char magic[] = "\x93NUMPY";
    out.insert(out.end(), magic, magic + 6);
    out.push_back(1);
    out.push_back(0);
    append_u16_le(out, static_cast<std::uint16_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());

    const std::size_t payload_at = out.size();
    out.resize(payload_at + tensor.data.size() * 4);
    static_assert(sizeof(float) == 4);
    // float32 payload is little-endian on every supported target.
    std::memcpy(out.data() + payload_at, tensor.data.data(), tensor.data.size() * 4);
    return out;
}

GraphFiles write_graph(const VoxelGraph& graph) {
    GraphFiles files;
    files.nodes_csv = "id,x,y,t,avg_p,count\n";
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const GraphNode& n = graph.nodes[i];
        files.nodes_csv += std::to_string(i);
        files.nodes_csv += ',';
        files.nodes_csv += format_double(n.x);
        files.nodes_csv += ',';
        files.nodes_csv += format_double(n.y);
        files.nodes_csv += ',';
        files.nodes_csv += format_double(n.t);
        files.nodes_csv += ',';
        files.nodes_csv += format_double(n.avg_polarity);
        files.nodes_csv += ',';
        files.nodes_csv += std::to_string(n.count);
        files.nodes_csv += '\n';
    }
    files.edges_csv = "src,dst\n";
    for (const auto& [src, dst] : graph.edges) {
        files.edges_csv += std::to_string(src);
        files.edges_csv += ',';
        files.edges_csv += std::to_string(dst);
        files.edges_csv += '\n';
    }
    return files;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        if (eol > pos) lines.emplace_back(text.substr(pos, eol - pos));
        pos = eol + 1;
    }
    return lines;
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError(std::string("graph: bad ") + what + " field '" + s + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

}  // namespace

VoxelGraph read_graph(const std::string& nodes_csv, const std::string& edges_csv) {
    VoxelGraph graph;
    const auto node_lines = split_lines(nodes_csv);
    if (node_lines.empty() || node_lines[0] != "id,x,y,t,avg_p,count")
        throw FormatError("graph: missing nodes header");
    for (std::size_t i = 1; i < node_lines.size(); ++i) {
        const auto f = split_fields(node_lines[i]);
        if (f.size() != 6) throw FormatError("graph: bad node line " + std::to_string(i));
        if (f[0] != std::to_string(i - 1)) throw FormatError("graph: non-sequential node id");
        GraphNode n;
        n.x = parse_double(f[1], "x");
        n.y = parse_double(f[2], "y");
        n.t = parse_double(f[3], "t");
        n.avg_polarity = parse_double(f[4], "avg_p");
        n.count = static_cast<std::uint32_t>(std::stoul(f[5]));
        graph.nodes.push_back(n);
    }
    const auto edge_lines = split_lines(edges_csv);
    if (edge_lines.empty() || edge_lines[0] != "src,dst")
        throw FormatError("graph: missing edges header");
    for (std::size_t i = 1; i < edge_lines.size(); ++i) {
        const auto f = split_fields(edge_lines[i]);
        if (f.size() != 2) throw FormatError("graph: bad edge line " + std::to_string(i));
        const auto src = static_cast<std::uint32_t>(std::stoul(f[0]));
        const auto dst = static_cast<std::uint32_t>(std::stoul(f[1]));
        if (src >= dst || dst >= graph.nodes.size())
            throw FormatError("graph: invalid edge " + f[0] + "," + f[1]);
        graph.edges.emplace_back(src, dst);
    }
    return graph;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes;
    in.seekg(0, std::ios::end);
    bytes.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw std::runtime_error("short read on " + path.string());
    return bytes;
}

namespace {

void write_file_atomic_impl(const std::filesystem::path& path, const char* data, std::size_t size) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out.write(data, static_cast<std::streamsize>(size));
        if (!out) throw std::runtime_error("short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    write_file_atomic_impl(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic_impl(path, text.data(), text.size());
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

}  // namespace evpipe::io
