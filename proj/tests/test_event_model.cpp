#include "doctest.h"

#include "evpipe/event_model.hpp"
#include "test_support.hpp"

using namespace evpipe;

namespace {

EventStream make_stream(SensorGeometry g, std::vector<Event> events) {
    return EventStream{g, std::move(events)};
}

}  // namespace

TEST_CASE("validate: empty stream is ok") {
    EventStream s;
    s.geometry = {16, 16};
    CHECK(validate(s).ok);
}

TEST_CASE("validate: reports first out-of-bounds event") {
    auto s = make_stream({8, 8}, {{0, 1, 1, 1}, {5, 8, 0, 1}});
    const auto report = validate(s);
    CHECK_FALSE(report.ok);
    CHECK(report.index == 1);
    CHECK(report.violation == "x out of bounds");
}

TEST_CASE("validate: reports ordering violation") {
    auto s = make_stream({8, 8}, {{5, 0, 0, 1}, {3, 0, 0, 1}});
    const auto report = validate(s);
    CHECK_FALSE(report.ok);
    CHECK(report.index == 1);
    CHECK(report.violation == "timestamps not non-decreasing");
}

TEST_CASE("validate: rejects zero polarity and negative timestamps") {
    auto s = make_stream({8, 8}, {{0, 0, 0, 0}});
    CHECK(validate(s).violation == "polarity not in {-1,+1}");
    auto s2 = make_stream({8, 8}, {{-1, 0, 0, 1}});
    CHECK(validate(s2).violation == "negative timestamp");
}

TEST_CASE("slice_window: half-open boundary") {
    auto s = make_stream({300, 300}, {{0, 0, 0, 1}, {49999, 1, 1, 1}, {50000, 2, 2, -1}});
    // 300 > 255 on purpose: slicing is geometry-agnostic.
    const auto sliced = slice_window(s, 0, 50000);
    REQUIRE(sliced.events.size() == 2);
    CHECK(sliced.events[1].t == 49999);
}

TEST_CASE("slice_window: empty stream and bad duration") {
    EventStream s;
    s.geometry = {4, 4};
    CHECK(slice_window(s, 0, 10).events.empty());
    CHECK_THROWS_AS(slice_window(s, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(slice_window(s, 0, -5), std::invalid_argument);
}

TEST_CASE("slice_window: matches linear-scan oracle on random streams") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto s = testsup::random_stream(seed, 10000, {64, 64}, 200000);
        const Timestamp t0 = 12345, dur = 67890;
        const auto sliced = slice_window(s, t0, dur);
        CHECK(sliced.events == testsup::oracle_slice(s, t0, dur));
    }
}

TEST_CASE("slice_window: idempotent and re-validates") {
    const auto s = testsup::random_stream(7, 2000, {32, 32}, 100000);
    const auto once = slice_window(s, 1000, 5000);
    const auto twice = slice_window(once, 1000, 5000);
    CHECK(once == twice);
    CHECK(validate(once).ok);
}

TEST_CASE("merge: identity with empty stream") {
    auto a = label_all(testsup::random_stream(1, 100, {16, 16}, 1000), EventLabel::signal);
    LabeledStream empty;
    empty.stream.geometry = a.stream.geometry;
    CHECK(merge(a, empty) == a);
    CHECK(merge(empty, a) == a);
}

TEST_CASE("merge: a-first tie rule") {
    LabeledStream a;
    a.stream = make_stream({4, 4}, {{10, 0, 0, 1}});
    a.labels = {EventLabel::signal};
    LabeledStream b;
    b.stream = make_stream({4, 4}, {{5, 1, 1, 1}, {10, 2, 2, -1}});
    b.labels = {EventLabel::noise, EventLabel::noise};

    const auto merged = merge(a, b);
    REQUIRE(merged.size() == 3);
    CHECK(merged.stream.events[0].t == 5);
    CHECK(merged.stream.events[1].x == 0);  // the a event wins the t=10 tie
    CHECK(merged.stream.events[2].x == 2);
}

TEST_CASE("merge: geometry mismatch throws") {
    LabeledStream a, b;
    a.stream.geometry = {4, 4};
    b.stream.geometry = {4, 5};
    CHECK_THROWS_AS(merge(a, b), std::invalid_argument);
}

TEST_CASE("merge: equals stable-sort oracle and preserves multisets") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto a = testsup::random_labeled_stream(seed, 1000, {32, 32}, 5000);
        const auto b = testsup::random_labeled_stream(seed + 100, 1000, {32, 32}, 5000);
        const auto merged = merge(a, b);
        CHECK(merged == testsup::oracle_merge(a, b));
        CHECK(validate(merged.stream).ok);
    }
}

TEST_CASE("merge: associative up to the tie rule") {
    const auto a = testsup::random_labeled_stream(11, 300, {16, 16}, 2000);
    const auto b = testsup::random_labeled_stream(12, 300, {16, 16}, 2000);
    const auto c = testsup::random_labeled_stream(13, 300, {16, 16}, 2000);
    CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));
}

TEST_CASE("labeled slice keeps labels aligned") {
    const auto a = testsup::random_labeled_stream(21, 500, {16, 16}, 10000);
    const auto sliced = slice_window(a, 2000, 3000);
    REQUIRE(sliced.labels.size() == sliced.stream.events.size());
    // Every (event, label) pair of the slice appears in the source at the
    // same relative position.
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size() && j < sliced.size(); ++i) {
        if (a.stream.events[i] == sliced.stream.events[j] && a.labels[i] == sliced.labels[j]) ++j;
    }
    CHECK(j == sliced.size());
}
