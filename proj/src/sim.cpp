#include "szn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "szn/errors.hpp"

namespace szn {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CrowdWorld make_crowd_world(std::uint64_t seed, int n_peds, const SimParams& params) {
    CrowdWorld world;
    world.params = params;
    world.rng.seed(seed);
    std::uniform_real_distribution<double> pos_dist(0.7, params.field - 0.7);
    std::uniform_real_distribution<double> speed_dist(params.ped_speed_min, params.ped_speed_max);
    world.peds.resize(static_cast<size_t>(n_peds));
    for (Pedestrian& p : world.peds) {
        p.pos = Vec2(pos_dist(world.rng), pos_dist(world.rng));
        p.waypoint = Vec2(pos_dist(world.rng), pos_dist(world.rng));
        p.v_pref = speed_dist(world.rng);
        p.history.push_back(p.pos);
    }
    // Warm up so every pedestrian carries a full observation history.
    for (int k = 1; k < kPastLen; ++k) step_pedestrians(world, params.dt);
    return world;
}

void step_pedestrians(CrowdWorld& world, double dt) {
    const SimParams& p = world.params;
    std::uniform_real_distribution<double> pos_dist(0.7, p.field - 0.7);
    const size_t n = world.peds.size();
    std::vector<Vec2> vel(n, Vec2::Zero());

    for (size_t i = 0; i < n; ++i) {
        Pedestrian& a = world.peds[i];
        if ((a.pos - a.waypoint).norm() < p.waypoint_tol) {
            a.waypoint = Vec2(pos_dist(world.rng), pos_dist(world.rng));
        }
        Vec2 dir = a.waypoint - a.pos;
        const double dist = dir.norm();
        dir = dist > 1e-9 ? Vec2(dir / dist) : Vec2(1.0, 0.0);
        Vec2 v = a.v_pref * dir;

        auto repulse = [&](const Vec2& other, double scale) {
            const Vec2 away = a.pos - other;
            const double d = away.norm();
            if (d < 1e-9 || d > 4.0) return;
            const double mag =
                scale * p.ped_repulsion_gain * std::exp((p.ped_repulsion_radius - d) / p.ped_repulsion_range);
            const Vec2 e = away / d;
            v += mag * e + 0.35 * mag * Vec2(-e.y(), e.x());
        };
        for (size_t j = 0; j < n; ++j) {
            if (j != i) repulse(world.peds[j].pos, 1.0);
        }
        if (world.ego_pos) repulse(*world.ego_pos, p.ego_repulsion_scale);

        const double speed = v.norm();
        if (speed > p.ped_speed_cap) v *= p.ped_speed_cap / speed;
        vel[i] = v;
    }
    for (size_t i = 0; i < n; ++i) {
        Pedestrian& a = world.peds[i];
        a.pos += vel[i] * dt;
        a.pos.x() = std::clamp(a.pos.x(), 0.3, p.field - 0.3);
        a.pos.y() = std::clamp(a.pos.y(), 0.3, p.field - 0.3);
        a.history.push_back(a.pos);
        while (a.history.size() > static_cast<size_t>(kPastLen)) a.history.pop_front();
    }
}

std::vector<ObservedPedestrian> observe_pedestrians(const CrowdWorld& world, const Vec2& ego) {
    std::vector<ObservedPedestrian> out;
    for (const Pedestrian& p : world.peds) {
        if ((p.pos - ego).norm() > world.params.sensor_radius) continue;
        if (p.history.size() < static_cast<size_t>(kPastLen)) continue;
        ObservedPedestrian obs;
        for (int k = 0; k < kPastLen; ++k) {
            obs.past_ego.row(k) = (p.history[static_cast<size_t>(k)] - ego).transpose();
        }
        out.push_back(obs);
    }
    return out;
}

TrialMetrics run_trial(const Scenario& scenario, const PpnModel& ppn, const EsnModel& esn,
                       const MpcConfig& mpc_cfg, const LipParams& lip, const KinematicBounds& kb,
                       TrialLog* log) {
    const SimParams& sp = scenario.params;
    std::mt19937_64 rng(scenario.seed);
    std::uniform_real_distribution<double> y_dist(0.0, 13.0);
    RobotState state;
    state.x = 0.0;
    state.y = y_dist(rng);
    CrowdWorld world = make_crowd_world(rng(), scenario.n_peds, sp);
    world.ego_pos = Vec2(state.x, state.y);

    TrialMetrics metrics;
    std::vector<double> solve_times;
    std::vector<double> velocities;
    std::vector<ControlInput> warm;
    if (log) {
        log->scenario = scenario;
        log->start = state;
        log->steps.clear();
        log->solve_seconds.clear();
    }

    auto min_distance_now = [&]() {
        double d = std::numeric_limits<double>::infinity();
        for (const Pedestrian& p : world.peds) {
            d = std::min(d, (p.pos - Vec2(state.x, state.y)).norm());
        }
        return d;
    };

    int step = 0;
    bool reached = false;
    for (; step <= sp.step_cap; ++step) {
        metrics.min_ped_distance = std::min(metrics.min_ped_distance, min_distance_now());
        if ((Vec2(state.x, state.y) - sp.goal).norm() <= sp.goal_tol) {
            reached = true;
            break;
        }
        if (step == sp.step_cap) break;

        EnvState env;
        env.goal = sp.goal;
        env.pedestrians = observe_pedestrians(world, Vec2(state.x, state.y));
        MpcSolution sol = solve(state, env, ppn, esn, mpc_cfg, lip, kb, warm);
        solve_times.push_back(sol.diag.solve_seconds);
        if (!sol.diag.feasible) ++metrics.infeasible_count;

        if (log) {
            TrialStep ts;
            ts.step = step;
            ts.state = state;
            ts.control = sol.controls.front();
            ts.n_observed = static_cast<int>(env.pedestrians.size());
            ts.min_distance = min_distance_now();
            ts.infeasible = !sol.diag.feasible;
            ts.ego_zonos = sol.ego_zonotopes;
            ts.ped_zonos = env.ped_zonotopes;
            for (const Pedestrian& p : world.peds) ts.ped_positions.push_back(p.pos);
            log->steps.push_back(std::move(ts));
            log->solve_seconds.push_back(sol.diag.solve_seconds);
        }

        // Shifted warm start for the next solve.
        warm.assign(sol.controls.begin() + 1, sol.controls.end());
        warm.push_back(sol.controls.back());

        state = lip_step(state, sol.controls.front(), lip);
        world.ego_pos = Vec2(state.x, state.y);
        step_pedestrians(world, sp.dt);
        if ((Vec2(state.x, state.y) - sp.goal).norm() > sp.goal_tol) {
            velocities.push_back(state.v_loc);
        }
    }

    metrics.success = reached;
    metrics.steps_to_goal = step;
    metrics.mean_velocity = velocities.empty()
                                ? 0.0
                                : std::accumulate(velocities.begin(), velocities.end(), 0.0) /
                                      static_cast<double>(velocities.size());
    const double med = median(solve_times);
    metrics.median_solve_hz = med > 0.0 ? 1.0 / med : 0.0;
    if (log) {
        log->final_state = state;
        log->metrics = metrics;
    }
    return metrics;
}

namespace {

void write_trajectory_csv(const TrialLog& log, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << "step,x,y,v_loc,theta,u_f,u_dtheta,n_observed,min_distance,infeasible\n";
    for (const TrialStep& s : log.steps) {
        os << s.step << ',' << fmt(s.state.x) << ',' << fmt(s.state.y) << ','
           << fmt(s.state.v_loc) << ',' << fmt(s.state.theta) << ',' << fmt(s.control.u_f) << ','
           << fmt(s.control.u_dtheta) << ',' << s.n_observed << ',' << fmt(s.min_distance) << ','
           << (s.infeasible ? 1 : 0) << '\n';
    }
    const RobotState& f = log.final_state;
    os << log.steps.size() << ',' << fmt(f.x) << ',' << fmt(f.y) << ',' << fmt(f.v_loc) << ','
       << fmt(f.theta) << ",0,0,0," << fmt(log.metrics.min_ped_distance) << ",0\n";
}

std::string svg_point(double x, double y, double field, double scale, double margin) {
    return fmt(margin + x * scale) + "," + fmt(margin + (field - y) * scale);
}

}  // namespace

void write_trial_svg(const TrialLog& log, const std::string& path) {
    const double field = log.scenario.params.field;
    const double scale = 40.0;
    const double margin = 20.0;
    const double size = field * scale + 2.0 * margin;

    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(size) << "\" height=\""
       << fmt(size) << "\" viewBox=\"0 0 " << fmt(size) << ' ' << fmt(size) << "\">\n";
    os << "<rect x=\"" << fmt(margin) << "\" y=\"" << fmt(margin) << "\" width=\""
       << fmt(field * scale) << "\" height=\"" << fmt(field * scale)
       << "\" fill=\"white\" stroke=\"black\"/>\n";

    auto polyline = [&](const std::vector<Vec2>& pts, const char* color, double width) {
        if (pts.size() < 2) return;
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
           << "\" points=\"";
        for (const Vec2& p : pts) os << svg_point(p.x(), p.y(), field, scale, margin) << ' ';
        os << "\"/>\n";
    };

    // Pedestrian paths.
    if (!log.steps.empty()) {
        const size_t n_peds = log.steps.front().ped_positions.size();
        for (size_t k = 0; k < n_peds; ++k) {
            std::vector<Vec2> pts;
            for (const TrialStep& s : log.steps) pts.push_back(s.ped_positions[k]);
            polyline(pts, "#2e8b57", 1.0);
        }
    }

    // Ego path.
    {
        std::vector<Vec2> pts;
        for (const TrialStep& s : log.steps) pts.push_back(Vec2(s.state.x, s.state.y));
        pts.push_back(Vec2(log.final_state.x, log.final_state.y));
        polyline(pts, "#0077aa", 2.0);
    }

    // Snapshot at the closest-approach step: zonotopes plus sensory radius.
    if (!log.steps.empty()) {
        size_t snap = 0;
        for (size_t i = 1; i < log.steps.size(); ++i) {
            if (log.steps[i].min_distance < log.steps[snap].min_distance) snap = i;
        }
        const TrialStep& s = log.steps[snap];
        os << "<circle cx=\""
           << fmt(margin + s.state.x * scale) << "\" cy=\"" << fmt(margin + (field - s.state.y) * scale)
           << "\" r=\"" << fmt(log.scenario.params.sensor_radius * scale)
           << "\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n";
        auto zono_polygon = [&](const Zonotope2& z, const char* fill, const char* stroke) {
            os << "<polygon fill=\"" << fill << "\" fill-opacity=\"0.35\" stroke=\"" << stroke
               << "\" points=\"";
            for (const Vec2& v : zonotope_vertices(z)) {
                os << svg_point(v.x(), v.y(), field, scale, margin) << ' ';
            }
            os << "\"/>\n";
        };
        for (const Zonotope2& z : s.ego_zonos) zono_polygon(z, "#66ccee", "#0077aa");
        for (const ZonoSeq& seq : s.ped_zonos) {
            for (const Zonotope2& z : seq) zono_polygon(z, "#99dd99", "#2e8b57");
        }
    }

    // Goal star.
    {
        const double cx = margin + log.scenario.params.goal.x() * scale;
        const double cy = margin + (field - log.scenario.params.goal.y()) * scale;
        os << "<path fill=\"#e6b800\" stroke=\"#806000\" d=\"M";
        for (int k = 0; k < 10; ++k) {
            const double r = (k % 2 == 0) ? 12.0 : 5.0;
            const double a = -M_PI / 2.0 + k * M_PI / 5.0;
            os << fmt(cx + r * std::cos(a)) << ' ' << fmt(cy + r * std::sin(a));
            os << (k == 9 ? "Z\"/>\n" : " L");
        }
    }
    os << "</svg>\n";
    if (!os) throw IoError("svg write failed: " + path);
}

std::string export_artifacts(const std::vector<TrialLog>& logs, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string metrics_path = out_dir + "/metrics.csv";
    {
        std::ofstream os(metrics_path);
        if (!os) throw IoError("cannot write " + metrics_path);
        os << "trial,seed,n_peds,success,steps_to_goal,mean_velocity,min_ped_distance,"
              "infeasible_count\n";
        for (size_t i = 0; i < logs.size(); ++i) {
            const TrialMetrics& m = logs[i].metrics;
            os << i << ',' << logs[i].scenario.seed << ',' << logs[i].scenario.n_peds << ','
               << (m.success ? 1 : 0) << ',' << m.steps_to_goal << ',' << fmt(m.mean_velocity)
               << ',' << fmt(m.min_ped_distance) << ',' << m.infeasible_count << '\n';
        }
    }
    {
        // Wall-clock diagnostics live apart so metrics.csv stays byte-reproducible.
        std::ofstream os(out_dir + "/timing.csv");
        if (!os) throw IoError("cannot write timing csv");
        os << "trial,seed,n_peds,median_solve_hz,median_solve_ms\n";
        for (size_t i = 0; i < logs.size(); ++i) {
            const double hz = logs[i].metrics.median_solve_hz;
            os << i << ',' << logs[i].scenario.seed << ',' << logs[i].scenario.n_peds << ','
               << fmt(hz) << ',' << fmt(hz > 0.0 ? 1000.0 / hz : 0.0) << '\n';
        }
    }
    for (size_t i = 0; i < logs.size(); ++i) {
        const std::string stem = out_dir + "/trial_s" + std::to_string(logs[i].scenario.seed) +
                                 "_p" + std::to_string(logs[i].scenario.n_peds) + "_t" +
                                 std::to_string(i);
        write_trajectory_csv(logs[i], stem + ".csv");
        write_trial_svg(logs[i], stem + ".svg");
    }
    return metrics_path;
}

}  // namespace szn
