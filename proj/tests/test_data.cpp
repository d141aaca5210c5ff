#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "szn/data.hpp"
#include "szn/errors.hpp"

using namespace szn;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream os(path);
    os << content;
    return path;
}

}  // namespace

TEST_CASE("a single well-formed line parses to one record") {
    const std::string path = temp_file("szn_one.txt", "0 1 2.0 3.0\n");
    const auto records = load_trajectories(path);
    REQUIRE(records.size() == 1);
    CHECK(records[0].frame_id == 0);
    CHECK(records[0].ped_id == 1);
    CHECK(records[0].x == 2.0);
    CHECK(records[0].y == 3.0);
    std::filesystem::remove(path);
}

TEST_CASE("records are sorted by frame then pedestrian") {
    const std::string path =
        temp_file("szn_sort.txt", "10 2 0 0\n0 5 1 1\n10 1 2 2\n0 3 3 3\n");
    const auto records = load_trajectories(path);
    REQUIRE(records.size() == 4);
    CHECK(records[0].frame_id == 0);
    CHECK(records[0].ped_id == 3);
    CHECK(records[1].ped_id == 5);
    CHECK(records[2].frame_id == 10);
    CHECK(records[2].ped_id == 1);
    std::filesystem::remove(path);
}

TEST_CASE("write then read round-trips the records") {
    std::vector<FrameRecord> records;
    for (int f = 0; f < 5; ++f) {
        for (int a = 0; a < 3; ++a) {
            records.push_back({f, a, 0.123456789 * f + a, -1.5 * a + 0.33 * f});
        }
    }
    const std::string path =
        (std::filesystem::temp_directory_path() / "szn_round.txt").string();
    write_trajectories(path, records);
    const auto back = load_trajectories(path);
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].frame_id == records[i].frame_id);
        CHECK(back[i].ped_id == records[i].ped_id);
        CHECK(back[i].x == records[i].x);
        CHECK(back[i].y == records[i].y);
    }
    std::filesystem::remove(path);
}

TEST_CASE("malformed lines report their position") {
    const std::string path = temp_file("szn_bad.txt", "0 1 2.0 3.0\n1 2 oops 4.0\n");
    try {
        load_trajectories(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.column == 5);
    }
    std::filesystem::remove(path);

    const std::string short_line = temp_file("szn_short.txt", "0 1 2.0\n");
    CHECK_THROWS_AS(load_trajectories(short_line), ParseError);
    std::filesystem::remove(short_line);

    const std::string dup = temp_file("szn_dup.txt", "0 1 2 3\n0 1 4 5\n");
    CHECK_THROWS_AS(load_trajectories(dup), ParseError);
    std::filesystem::remove(dup);

    const std::string empty = temp_file("szn_empty.txt", "\n# comment only\n");
    CHECK_THROWS_AS(load_trajectories(empty), EmptyFile);
    std::filesystem::remove(empty);
}

TEST_CASE("a lone agent windows with empty neighbor lists") {
    std::vector<FrameRecord> records;
    const int frames = 20;
    for (int f = 0; f < frames; ++f) records.push_back({f, 1, 0.4 * f, 0.0});
    const auto samples = make_windows(records);
    CHECK(samples.size() == static_cast<size_t>(frames - 15));
    for (const TrainingSample& s : samples) {
        CHECK(s.neighbors.empty());
        CHECK(s.agent_past.row(7).norm() == 0.0);  // current position is the origin
        for (int i = 0; i < 7; ++i) {
            const Vec2 mid = 0.5 * (s.agent_future.row(i) + s.agent_future.row(i + 1));
            CHECK((Vec2(s.midpoints.row(i)) - mid).norm() == 0.0);
        }
        CHECK((s.goal - Vec2(s.agent_future.row(7))).norm() == 0.0);
        CHECK((s.ego_next - Vec2(s.agent_future.row(0))).norm() == 0.0);
    }
}

TEST_CASE("agents 10 m apart never appear as neighbors") {
    std::vector<FrameRecord> records;
    for (int f = 0; f < 16; ++f) {
        records.push_back({f, 1, 0.1 * f, 0.0});
        records.push_back({f, 2, 0.1 * f, 10.0});
    }
    const auto samples = make_windows(records);
    REQUIRE(samples.size() == 2);
    for (const TrainingSample& s : samples) CHECK(s.neighbors.empty());
}

TEST_CASE("hand-built three-agent scene produces the expected neighbors") {
    // Agent 1 walks along y = 0; agent 2 parallel at y = 2 (within 4 m);
    // agent 3 parallel at y = 8 (outside). Agent 2 only has the first 12
    // frames, so it offers a past but no future.
    std::vector<FrameRecord> records;
    for (int f = 0; f < 16; ++f) {
        records.push_back({f, 1, 0.5 * f, 0.0});
        if (f < 12) records.push_back({f, 2, 0.5 * f, 2.0});
        records.push_back({f, 3, 0.5 * f, 8.0});
    }
    const auto samples = make_windows(records);
    // Agents 1 and 3 each have one full window; agent 2 lacks frames.
    REQUIRE(samples.size() == 2);

    const TrainingSample& s1 = samples[0];  // agents iterate in id order
    REQUIRE(s1.neighbors.size() == 1);      // only agent 2 is in range
    CHECK(!s1.neighbors[0].future.has_value());
    // Neighbor past in the ego frame: agent 2 at frame 7 sits at (0, 2).
    CHECK((Vec2(s1.neighbors[0].past.row(7)) - Vec2(0.0, 2.0)).norm() < 1e-12);
    CHECK((Vec2(s1.neighbors[0].past.row(0)) - Vec2(-3.5, 2.0)).norm() < 1e-12);
    // Agent 1's own window: current position (3.5, 0) maps to the origin.
    CHECK((Vec2(s1.agent_future.row(0)) - Vec2(0.5, 0.0)).norm() < 1e-12);
    CHECK((Vec2(s1.midpoints.row(0)) - Vec2(0.75, 0.0)).norm() < 1e-12);

    const TrainingSample& s3 = samples[1];
    CHECK(s3.neighbors.empty());  // agents 1 and 2 are 8 and 6 m away
}

TEST_CASE("neighbors with full futures carry them") {
    std::vector<FrameRecord> records;
    for (int f = 0; f < 16; ++f) {
        records.push_back({f, 1, 0.5 * f, 0.0});
        records.push_back({f, 2, 0.5 * f, 1.0});
    }
    const auto samples = make_windows(records);
    REQUIRE(samples.size() == 2);
    REQUIRE(samples[0].neighbors.size() == 1);
    REQUIRE(samples[0].neighbors[0].future.has_value());
    CHECK((Vec2(samples[0].neighbors[0].future->row(7)) - Vec2(4.0, 1.0)).norm() < 1e-12);
}

TEST_CASE("leave-one-out split") {
    NamedRecords sets;
    for (const char* name : {"eth", "hotel", "univ", "zara1", "zara2"}) {
        sets[name] = {{0, 1, 0.0, 0.0}};
    }
    const SplitResult split = leave_one_out_split(sets, "univ");
    CHECK(split.train.size() == 4);
    CHECK(split.test.size() == 1);
    CHECK(split.test.count("univ") == 1);
    CHECK(split.train.count("univ") == 0);
    CHECK_THROWS_AS(leave_one_out_split(sets, "nowhere"), UnknownDataset);
}

TEST_CASE("synthetic crowd: lone walker moves straight within speed bounds") {
    SynthParams p;
    p.heading_jitter = 0.0;
    const auto records = synth_crowd(12, 1, 20.0, p);
    REQUIRE(records.size() == 50);
    for (size_t i = 1; i < records.size(); ++i) {
        const double dx = records[i].x - records[i - 1].x;
        const double dy = records[i].y - records[i - 1].y;
        const double speed = std::hypot(dx, dy) / p.dt;
        if (speed < 0.1) continue;  // waypoint switch frame
        CHECK(speed > 0.8);
        CHECK(speed < 1.6 + 1e-9);
    }
}

TEST_CASE("synthetic crowd is deterministic per seed") {
    const auto a = synth_crowd(77, 4, 30.0);
    const auto b = synth_crowd(77, 4, 30.0);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
    }
}

TEST_CASE("crossing walkers keep a hard-core separation") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        const auto records = synth_crowd(seed, 2, 120.0);
        std::map<long long, std::map<long long, Vec2>> by_frame;
        for (const auto& r : records) by_frame[r.frame_id][r.ped_id] = Vec2(r.x, r.y);
        double min_d = 1e9;
        for (const auto& [f, agents] : by_frame) {
            if (agents.size() == 2) {
                min_d = std::min(min_d, (agents.at(0) - agents.at(1)).norm());
            }
        }
        CHECK(min_d > 0.3);
    }
}

TEST_CASE("sample cache round-trips") {
    const auto sets = make_synthetic_sets(5, 60);
    REQUIRE(!sets.train.empty());
    const std::string path =
        (std::filesystem::temp_directory_path() / "szn_samples.txt").string();
    save_samples(path, sets.train);
    const auto back = load_samples(path);
    REQUIRE(back.size() == sets.train.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK((back[i].agent_past - sets.train[i].agent_past).norm() == 0.0);
        CHECK((back[i].agent_future - sets.train[i].agent_future).norm() == 0.0);
        REQUIRE(back[i].neighbors.size() == sets.train[i].neighbors.size());
        for (size_t nidx = 0; nidx < back[i].neighbors.size(); ++nidx) {
            CHECK((back[i].neighbors[nidx].past - sets.train[i].neighbors[nidx].past).norm() ==
                  0.0);
            CHECK(back[i].neighbors[nidx].future.has_value() ==
                  sets.train[i].neighbors[nidx].future.has_value());
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("every sample respects the neighbor radius") {
    const auto sets = make_synthetic_sets(9, 150);
    for (const TrainingSample& s : sets.train) {
        for (const NeighborTrack& nb : s.neighbors) {
            CHECK(nb.past.row(7).norm() <= 4.0 + 1e-9);
        }
    }
}
