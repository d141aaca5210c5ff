#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "szn/losses.hpp"

namespace szn {

/// One crowd-dataset annotation: whitespace-delimited
/// "frame_id ped_id x y" per line, consecutive frames 0.4 s apart.
struct FrameRecord {
    long long frame_id = 0;
    long long ped_id = 0;
    double x = 0.0;  // m, world
    double y = 0.0;  // m, world
};

/// Parses and sorts by (frame_id, ped_id). Throws ParseError with the
/// offending line/column, or EmptyFile when no records survive.
std::vector<FrameRecord> load_trajectories(const std::string& path);

/// Inverse of load_trajectories for round-trip checks and converters.
void write_trajectories(const std::string& path, const std::vector<FrameRecord>& records);

struct NeighborTrack {
    Traj8 past;                   // ego frame
    std::optional<Traj8> future;  // ego frame, present when the neighbor has 8 more frames
};

/**
 * One windowed example. All coordinates are shifted so the window agent's
 * current position (last observed frame) is the origin. Neighbors are other
 * agents with complete 8-frame pasts within `radius` of the agent at the
 * current frame; their futures ride along when available so they can serve
 * as pedestrian prediction targets.
 */
struct TrainingSample {
    Traj8 agent_past;
    Traj8 agent_future;
    Mid7 midpoints;  // (future[i] + future[i+1]) / 2
    Vec2 goal;       // last future point
    Vec2 ego_next;   // first future displacement
    std::vector<NeighborTrack> neighbors;
};

/// Windows every agent over every run of 16 frames that is contiguous on the
/// dataset's frame stride (the modal gap between consecutive distinct
/// frame ids).
std::vector<TrainingSample> make_windows(const std::vector<FrameRecord>& records,
                                         int obs_len = 8, int pred_len = 8, double radius = 4.0);

using NamedRecords = std::map<std::string, std::vector<FrameRecord>>;

struct SplitResult {
    NamedRecords train;
    NamedRecords test;
};

/// train = union of all datasets except held_out; test = held_out only.
/// Throws UnknownDataset if the name is absent.
SplitResult leave_one_out_split(const NamedRecords& datasets, const std::string& held_out);

struct SynthParams {
    double field = 30.0;         // m, square side
    double speed_min = 0.85;     // m/s preferred speed draw
    double speed_max = 1.55;
    double repulsion_gain = 0.8;    // m/s
    double repulsion_range = 0.35;  // m, exponential decay length
    double repulsion_radius = 0.55; // m, hard-core offset
    double heading_jitter = 0.003;  // rad std dev per frame
    double waypoint_tol = 0.4;      // m
    double min_leg = 14.0;          // m, new waypoints at least this far out
    double cone_half_angle = 0.08;  // rad, new waypoints near the current heading
    double max_turn_rate = 0.2;     // rad per frame toward the waypoint
    double dt = 0.4;                // s between frames
};

/// Goal-directed walkers with pairwise social-force repulsion and mild
/// heading noise; deterministic per seed. duration_s is converted to frames
/// at 0.4 s each.
std::vector<FrameRecord> synth_crowd(std::uint64_t seed, int n_agents, double duration_s,
                                     const SynthParams& params = {});

/// Versioned text cache of windowed samples (see docs/formats.md).
void save_samples(const std::string& path, const std::vector<TrainingSample>& samples);
std::vector<TrainingSample> load_samples(const std::string& path);

struct SampleSets {
    std::vector<TrainingSample> train;
    std::vector<TrainingSample> held_out;
};

/// Windows two independently seeded synthetic crowds into roughly n_train
/// training samples plus a smaller held-out set.
SampleSets make_synthetic_sets(std::uint64_t seed, int n_train, double radius = 4.0);

}  // namespace szn
