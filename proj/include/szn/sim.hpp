#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "szn/mpc.hpp"

namespace szn {

struct SimParams {
    double field = 14.0;         // m, square side
    Vec2 goal = Vec2(10.0, 10.0);
    double sensor_radius = 4.0;  // m
    double min_distance = 0.5;   // m, navigation-safety threshold d
    int step_cap = 100;          // walking steps per trial
    double goal_tol = 1.0;       // m, success radius
    double dt = 0.4;             // s per walking step / pedestrian frame
    double ped_speed_min = 0.85;      // m/s preferred speed draw
    double ped_speed_max = 1.45;
    double ped_speed_cap = 1.8;       // m/s hard clamp
    double ped_repulsion_gain = 1.3;  // m/s
    double ped_repulsion_range = 0.7; // m
    double ped_repulsion_radius = 0.7;  // m
    double ego_repulsion_scale = 1.6;   // extra weight on avoiding the robot
    double waypoint_tol = 0.4;   // m
};

struct Scenario {
    int n_peds = 5;
    std::uint64_t seed = 0;
    SimParams params;
};

struct Pedestrian {
    Vec2 pos = Vec2::Zero();
    Vec2 waypoint = Vec2::Zero();
    double v_pref = 1.0;
    std::deque<Vec2> history;  // last kPastLen positions, oldest first
};

/// Crowd state stepped by goal-directed velocities plus social-force
/// repulsion (pedestrians also avoid the ego-agent when present).
struct CrowdWorld {
    std::vector<Pedestrian> peds;
    std::optional<Vec2> ego_pos;
    SimParams params;
    std::mt19937_64 rng;
};

CrowdWorld make_crowd_world(std::uint64_t seed, int n_peds, const SimParams& params);

/// Advances every pedestrian by dt; deterministic per world RNG state.
void step_pedestrians(CrowdWorld& world, double dt = 0.4);

/// Pedestrians within the sensory radius of `ego`, pasts shifted to the ego
/// frame. The planner sees nothing else.
std::vector<ObservedPedestrian> observe_pedestrians(const CrowdWorld& world, const Vec2& ego);

struct TrialMetrics {
    bool success = false;
    int steps_to_goal = 0;       // walking steps taken
    double mean_velocity = 0.0;  // m/s over pre-goal samples
    double min_ped_distance = std::numeric_limits<double>::infinity();
    double median_solve_hz = 0.0;
    int infeasible_count = 0;
};

struct TrialStep {
    int step = 0;
    RobotState state;         // before applying the control
    ControlInput control;
    int n_observed = 0;
    double min_distance = std::numeric_limits<double>::infinity();
    bool infeasible = false;
    std::vector<Zonotope2> ego_zonos;  // world frame
    std::vector<ZonoSeq> ped_zonos;    // world frame
    std::vector<Vec2> ped_positions;   // all pedestrians
};

struct TrialLog {
    Scenario scenario;
    RobotState start;
    std::vector<TrialStep> steps;
    RobotState final_state;
    TrialMetrics metrics;
    std::vector<double> solve_seconds;
};

/// Closed loop per walking step: observe, solve the footstep MPC, apply the
/// first control, advance the crowd. Infeasible solves already carry the
/// brake fallback and are counted.
TrialMetrics run_trial(const Scenario& scenario, const PpnModel& ppn, const EsnModel& esn,
                       const MpcConfig& mpc_cfg, const LipParams& lip, const KinematicBounds& kb,
                       TrialLog* log = nullptr);

/// Writes metrics.csv (one row per trial, deterministic fields), timing.csv
/// (solve-rate diagnostics, wall-clock dependent), per-trial trajectory CSVs
/// and an SVG snapshot. Returns the metrics csv path.
std::string export_artifacts(const std::vector<TrialLog>& logs, const std::string& out_dir);

/// SVG snapshot of one trial at its closest-approach step: paths, zonotopes,
/// sensory radius, goal star.
void write_trial_svg(const TrialLog& log, const std::string& path);

}  // namespace szn
