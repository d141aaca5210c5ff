#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "szn/sim.hpp"
#include "szn/train.hpp"

using namespace szn;

namespace {

using szn::testing::trained_models;

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Minimal well-formedness scan: tags balance, attributes quoted.
bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        const size_t close = text.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = text.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        bool closing = tag[0] == '/';
        bool self_closing = tag.back() == '/';
        if (closing) tag = tag.substr(1);
        if (self_closing) tag.pop_back();
        const std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
        if (name.empty()) return false;
        // Quotes must pair up within the tag.
        if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
        if (closing) {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!self_closing) {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

int count_occurrences(const std::string& text, const std::string& needle) {
    int n = 0;
    size_t at = 0;
    while ((at = text.find(needle, at)) != std::string::npos) {
        ++n;
        at += needle.size();
    }
    return n;
}

}  // namespace

TEST_CASE("a lone pedestrian walks straight to its waypoint") {
    SimParams params;
    CrowdWorld world = make_crowd_world(42, 1, params);
    const Vec2 start = world.peds[0].pos;
    const Vec2 waypoint = world.peds[0].waypoint;
    std::vector<Vec2> track{start};
    for (int k = 0; k < 10; ++k) {
        step_pedestrians(world);
        track.push_back(world.peds[0].pos);
    }
    // Collinear with the start-to-waypoint line until the waypoint flips.
    const Vec2 dir = (waypoint - start).normalized();
    for (const Vec2& p : track) {
        if ((p - waypoint).norm() < params.waypoint_tol + 0.8) break;
        const Vec2 rel = p - start;
        const double off_axis = std::abs(rel.x() * dir.y() - rel.y() * dir.x());
        CHECK(off_axis < 1e-9);
    }
}

TEST_CASE("crowd stepping is deterministic per seed") {
    SimParams params;
    CrowdWorld a = make_crowd_world(9, 6, params);
    CrowdWorld b = make_crowd_world(9, 6, params);
    for (int k = 0; k < 25; ++k) {
        step_pedestrians(a);
        step_pedestrians(b);
    }
    for (size_t i = 0; i < a.peds.size(); ++i) {
        CHECK(a.peds[i].pos.x() == b.peds[i].pos.x());
        CHECK(a.peds[i].pos.y() == b.peds[i].pos.y());
    }
}

TEST_CASE("head-on pedestrians deflect and keep a hard core") {
    SimParams params;
    CrowdWorld world = make_crowd_world(1, 0, params);
    Pedestrian a, b;
    a.pos = Vec2(3.0, 7.0);
    a.waypoint = Vec2(11.0, 7.0);
    a.v_pref = 1.3;
    b.pos = Vec2(11.0, 7.0);
    b.waypoint = Vec2(3.0, 7.0);
    b.v_pref = 1.3;
    for (int i = 0; i < 8; ++i) {
        a.history.push_back(a.pos);
        b.history.push_back(b.pos);
    }
    world.peds = {a, b};
    double min_d = 1e9;
    double a_max_x = a.pos.x();
    double b_min_x = b.pos.x();
    for (int k = 0; k < 30; ++k) {
        step_pedestrians(world);
        min_d = std::min(min_d, (world.peds[0].pos - world.peds[1].pos).norm());
        a_max_x = std::max(a_max_x, world.peds[0].pos.x());
        b_min_x = std::min(b_min_x, world.peds[1].pos.x());
    }
    CHECK(min_d > 0.35);
    CHECK(a_max_x > 9.0);  // both actually crossed
    CHECK(b_min_x < 5.0);
}

TEST_CASE("observation respects the sensory radius") {
    SimParams params;
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> d(0.5, 13.5);
    for (int trial = 0; trial < 50; ++trial) {
        CrowdWorld world = make_crowd_world(rng(), 12, params);
        const Vec2 ego(d(rng), d(rng));
        const auto observed = observe_pedestrians(world, ego);
        int manual = 0;
        for (const Pedestrian& p : world.peds) {
            if ((p.pos - ego).norm() <= params.sensor_radius) ++manual;
        }
        CHECK(static_cast<int>(observed.size()) == manual);
        for (const auto& obs : observed) {
            CHECK(obs.past_ego.row(7).norm() <= params.sensor_radius + 1e-9);
        }
    }
}

TEST_CASE("a pedestrian-free trial reaches the goal") {
    const auto& m = trained_models();
    Scenario sc;
    sc.n_peds = 0;
    sc.seed = 5;
    const TrialMetrics metrics =
        run_trial(sc, m.ppn, m.esn, MpcConfig{}, LipParams{}, KinematicBounds{});
    CHECK(metrics.success);
    CHECK(metrics.steps_to_goal <= sc.params.step_cap);
    CHECK(std::isinf(metrics.min_ped_distance));
    CHECK(metrics.mean_velocity > 0.0);
}

TEST_CASE("trials are seed-deterministic end to end") {
    const auto& m = trained_models();
    Scenario sc;
    sc.n_peds = 3;
    sc.seed = 12;
    sc.params.step_cap = 25;
    TrialLog log_a, log_b;
    run_trial(sc, m.ppn, m.esn, MpcConfig{}, LipParams{}, KinematicBounds{}, &log_a);
    run_trial(sc, m.ppn, m.esn, MpcConfig{}, LipParams{}, KinematicBounds{}, &log_b);
    REQUIRE(log_a.steps.size() == log_b.steps.size());
    for (size_t k = 0; k < log_a.steps.size(); ++k) {
        CHECK(log_a.steps[k].state.x == log_b.steps[k].state.x);
        CHECK(log_a.steps[k].state.y == log_b.steps[k].state.y);
        CHECK(log_a.steps[k].control.u_f == log_b.steps[k].control.u_f);
        CHECK(log_a.steps[k].min_distance == log_b.steps[k].min_distance);
    }
    CHECK(log_a.metrics.min_ped_distance == log_b.metrics.min_ped_distance);
}

TEST_CASE("export writes deterministic csvs and well-formed svg") {
    const auto& m = trained_models();
    Scenario sc;
    sc.n_peds = 4;
    sc.seed = 21;
    sc.params.step_cap = 20;
    TrialLog log;
    run_trial(sc, m.ppn, m.esn, MpcConfig{}, LipParams{}, KinematicBounds{}, &log);

    const std::string dir =
        (std::filesystem::temp_directory_path() / "szn_export_test").string();
    std::filesystem::remove_all(dir);
    const std::string metrics_path = export_artifacts({log}, dir);

    const std::string metrics = slurp(metrics_path);
    CHECK(count_occurrences(metrics, "\n") == 2);  // header + one trial

    // Trajectory CSV: one row per executed step plus the final state.
    const std::string stem = dir + "/trial_s21_p4_t0";
    const std::string traj = slurp(stem + ".csv");
    CHECK(count_occurrences(traj, "\n") == static_cast<int>(log.steps.size()) + 2);

    const std::string svg = slurp(stem + ".svg");
    CHECK(xml_well_formed(svg));
    // One polygon per live zonotope at the snapshot step.
    size_t snap = 0;
    for (size_t i = 1; i < log.steps.size(); ++i) {
        if (log.steps[i].min_distance < log.steps[snap].min_distance) snap = i;
    }
    const int expected = static_cast<int>(log.steps[snap].ego_zonos.size()) +
                         static_cast<int>(log.steps[snap].ped_zonos.size()) * kPredSteps;
    CHECK(count_occurrences(svg, "<polygon") == expected);

    std::filesystem::remove_all(dir);
}

TEST_CASE("export with no trials yields header-only csvs") {
    const std::string dir =
        (std::filesystem::temp_directory_path() / "szn_export_empty").string();
    std::filesystem::remove_all(dir);
    const std::string metrics_path = export_artifacts({}, dir);
    const std::string metrics = slurp(metrics_path);
    CHECK(count_occurrences(metrics, "\n") == 1);
    const std::string timing = slurp(dir + "/timing.csv");
    CHECK(count_occurrences(timing, "\n") == 1);
    std::filesystem::remove_all(dir);
}
