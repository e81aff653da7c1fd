#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "evpipe/event_io.hpp"
#include "test_support.hpp"

using namespace evpipe;

TEST_CASE("atis: decodes the documented bit layout") {
    const std::vector<std::uint8_t> bytes = {0x0A, 0x14, 0x80, 0x03, 0xE8};
    const auto s = io::read_atis_bin(bytes);
    REQUIRE(s.events.size() == 1);
    CHECK(s.events[0].x == 10);
    CHECK(s.events[0].y == 20);
    CHECK(s.events[0].p == 1);
    CHECK(s.events[0].t == 1000);
}

TEST_CASE("atis: empty file, default geometry, truncation error") {
    CHECK(io::read_atis_bin({}).events.empty());
    CHECK(io::read_atis_bin({}).geometry == SensorGeometry{1, 1});
    CHECK_THROWS_AS(io::read_atis_bin({0x01, 0x02, 0x03}), io::FormatError);
}

TEST_CASE("atis: timestamp wrap unwrapping survives a round trip") {
    EventStream s;
    s.geometry = {240, 180};
    // Events spanning several 2^23 us wraps with small gaps.
    Timestamp t = 8000000;
    for (int i = 0; i < 60; ++i) {
        s.events.push_back({t, static_cast<std::uint16_t>(i % 240),
                            static_cast<std::uint16_t>(i % 180),
                            static_cast<std::int8_t>(i % 2 ? 1 : -1)});
        t += 300000;
    }
    const auto decoded = io::read_atis_bin(io::write_atis_bin(s), s.geometry);
    CHECK(decoded == s);
    // Monotone after unwrapping.
    for (std::size_t i = 1; i < decoded.events.size(); ++i)
        CHECK(decoded.events[i].t >= decoded.events[i - 1].t);
}

TEST_CASE("atis: writer rejects out-of-range coordinates and wide gaps") {
    EventStream s;
    s.geometry = {300, 180};
    s.events = {{0, 280, 0, 1}};
    CHECK_THROWS_AS(io::write_atis_bin(s), std::out_of_range);

    EventStream gap;
    gap.geometry = {100, 100};
    gap.events = {{0, 0, 0, 1}, {Timestamp(1) << 23, 1, 1, 1}};
    CHECK_THROWS_AS(io::write_atis_bin(gap), std::out_of_range);
}

TEST_CASE("atis: random round trip") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto s = testsup::random_stream(seed, 1000, {240, 180}, 4000000);
        const auto decoded = io::read_atis_bin(io::write_atis_bin(s), s.geometry);
        CHECK(decoded == s);
    }
}

TEST_CASE("evs: empty file is a 16-byte header with count 0") {
    EventStream s;
    s.geometry = {240, 180};
    const auto bytes = io::write_evs_unlabeled(s);
    CHECK(bytes.size() == 16);
    const auto parsed = io::read_evs(bytes);
    CHECK(parsed.stream.events.empty());
    CHECK(parsed.stream.geometry == SensorGeometry{240, 180});
    CHECK_FALSE(parsed.labels.has_value());
}

TEST_CASE("evs: labeled round trip including labels") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto labeled = testsup::random_labeled_stream(seed, 10000, {640, 480}, 1000000);
        const auto parsed = io::read_evs(io::write_evs(labeled));
        REQUIRE(parsed.labels.has_value());
        CHECK(parsed.to_labeled() == labeled);
    }
}

TEST_CASE("evs: corrupt inputs are rejected") {
    EventStream s;
    s.geometry = {4, 4};
    s.events = {{5, 1, 1, 1}};
    auto bytes = io::write_evs_unlabeled(s);
    SUBCASE("bad magic") {
        bytes[0] = 'X';
        CHECK_THROWS_AS(io::read_evs(bytes), io::FormatError);
    }
    SUBCASE("count mismatch") {
        bytes.pop_back();
        CHECK_THROWS_AS(io::read_evs(bytes), io::FormatError);
    }
    SUBCASE("bad polarity") {
        bytes[16 + 12] = 3;
        CHECK_THROWS_AS(io::read_evs(bytes), io::FormatError);
    }
    SUBCASE("bad label") {
        bytes[16 + 13] = 7;
        CHECK_THROWS_AS(io::read_evs(bytes), io::FormatError);
    }
}

TEST_CASE("csv: parses the documented line format") {
    const auto s = io::read_csv("1000,10,20,1\n");
    REQUIRE(s.events.size() == 1);
    CHECK(s.events[0] == Event{1000, 10, 20, 1});

    const auto with_header = io::read_csv("t,x,y,p\n1000,10,20,-1\n");
    REQUIRE(with_header.events.size() == 1);
    CHECK(with_header.events[0].p == -1);

    CHECK_THROWS_AS(io::read_csv("1,2,3\n"), io::FormatError);
    CHECK_THROWS_AS(io::read_csv("1,2,3,0\n"), io::FormatError);
    CHECK_THROWS_AS(io::read_csv("a,2,3,1\n"), io::FormatError);
}

TEST_CASE("csv: round trip") {
    const auto s = testsup::random_stream(3, 500, {128, 128}, 100000);
    CHECK(io::read_csv(io::write_csv(s), s.geometry) == s);
    CHECK(io::read_csv(io::write_csv(s, true), s.geometry) == s);
}

TEST_CASE("npy: documented header for a 2x2 tensor") {
    DenseTensor t;
    t.shape = {2, 2};
    t.data = {1, 2, 3, 4};
    const auto bytes = io::write_npy(t);
    const std::string header(bytes.begin() + 10, bytes.begin() + 10 + (bytes[8] | (bytes[9] << 8)));
    CHECK(header.find("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }") == 0);
    CHECK((10 + header.size()) % 64 == 0);
    CHECK(header.back() == '\n');
    CHECK(bytes.size() == 10 + header.size() + 16);
}

TEST_CASE("npy: zero tensor payload arithmetic") {
    DenseTensor t;
    t.shape = {2, 180, 240};
    t.data.assign(2 * 180 * 240, 0.0f);
    const auto bytes = io::write_npy(t);
    const std::size_t hlen = bytes[8] | (bytes[9] << 8);
    CHECK(bytes.size() - 10 - hlen == 345600);  // 2*180*240 floats of 4 bytes
    const auto parsed = testsup::parse_npy(bytes);
    CHECK(parsed.shape == t.shape);
    CHECK(parsed.data == t.data);
}

TEST_CASE("npy: 1-d shape uses the single-element tuple form") {
    DenseTensor t;
    t.shape = {5};
    t.data = {0, 1, 2, 3, 4};
    const auto bytes = io::write_npy(t);
    const std::string header(bytes.begin() + 10, bytes.begin() + 10 + (bytes[8] | (bytes[9] << 8)));
    CHECK(header.find("'shape': (5,)") != std::string::npos);
    CHECK(testsup::parse_npy(bytes).shape == t.shape);
}

TEST_CASE("npy: numpy reads our files back bit-exact") {
    // Third-party oracle: numpy re-parses a random tensor and re-emits the
    // payload; the bytes must match the original float data exactly.
    rng::SplitMix64 gen(99);
    DenseTensor t;
    t.shape = {3, 7, 5};
    t.data.resize(105);
    for (auto& v : t.data) v = static_cast<float>(gen.next_double() * 2000.0 - 1000.0);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "evpipe_npy_oracle";
    fs::create_directories(dir);
    const fs::path npy = dir / "t.npy";
    const fs::path raw = dir / "t.raw";
    io::write_file_atomic(npy, io::write_npy(t));

    const std::string script =
        "import numpy as np, sys\n"
        "a = np.load(sys.argv[1])\n"
        "assert a.dtype == np.dtype('<f4'), a.dtype\n"
        "assert a.flags['C_CONTIGUOUS']\n"
        "assert a.shape == (3, 7, 5), a.shape\n"
        "a.tofile(sys.argv[2])\n";
    const fs::path script_path = dir / "check.py";
    io::write_file_atomic(script_path, script);
    const std::string cmd = "python3 " + script_path.string() + " " + npy.string() + " " +
                            raw.string();
    REQUIRE(std::system(cmd.c_str()) == 0);

    const auto raw_bytes = io::read_file(raw);
    REQUIRE(raw_bytes.size() == t.data.size() * 4);
    std::vector<float> round(t.data.size());
    std::memcpy(round.data(), raw_bytes.data(), raw_bytes.size());
    CHECK(round == t.data);
}

TEST_CASE("graph: empty and single-node files") {
    VoxelGraph g;
    auto files = io::write_graph(g);
    CHECK(files.nodes_csv == "id,x,y,t,avg_p,count\n");
    CHECK(files.edges_csv == "src,dst\n");

    g.nodes.push_back({0.5, 0.25, 0.125, -1.0 / 3.0, 3});
    files = io::write_graph(g);
    CHECK(files.nodes_csv.find("0,0.5,0.25,0.125,") != std::string::npos);
    CHECK(io::read_graph(files.nodes_csv, files.edges_csv) == g);
}

TEST_CASE("graph: random round trip reproduces adjacency exactly") {
    rng::SplitMix64 gen(5);
    VoxelGraph g;
    for (int i = 0; i < 60; ++i)
        g.nodes.push_back({gen.next_double(), gen.next_double(), gen.next_double(),
                           2.0 * gen.next_double() - 1.0,
                           static_cast<std::uint32_t>(1 + gen.next_below(9))});
    for (std::uint32_t i = 0; i < 60; ++i)
        for (std::uint32_t j = i + 1; j < 60; ++j)
            if (gen.next_below(10) == 0) g.edges.emplace_back(i, j);

    const auto files = io::write_graph(g);
    CHECK(io::read_graph(files.nodes_csv, files.edges_csv) == g);
}

TEST_CASE("file helpers: atomic write then read") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "evpipe_io_test";
    fs::create_directories(dir);
    const fs::path p = dir / "sub" / "x.bin";
    io::write_file_atomic(p, std::vector<std::uint8_t>{1, 2, 3});
    CHECK(io::read_file(p) == std::vector<std::uint8_t>{1, 2, 3});
    CHECK_FALSE(fs::exists(p.string() + ".tmp"));
}
