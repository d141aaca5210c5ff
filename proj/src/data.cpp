#include "szn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>

#include "szn/errors.hpp"

namespace szn {

namespace {

struct Token {
    std::string text;
    int column = 0;  // 1-based
};

std::vector<Token> split_line(const std::string& line) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

long long parse_int(const Token& t, int line_no) {
    long long v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) {
        throw ParseError("expected integer, got '" + t.text + "'", line_no, t.column);
    }
    return v;
}

double parse_double(const Token& t, int line_no) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) {
        throw ParseError("expected number, got '" + t.text + "'", line_no, t.column);
    }
    if (!std::isfinite(v)) throw ParseError("non-finite coordinate", line_no, t.column);
    return v;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<FrameRecord> load_trajectories(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open dataset file: " + path);

    std::vector<FrameRecord> records;
    std::map<std::pair<long long, long long>, int> seen;  // (frame, ped) -> line
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::vector<Token> toks = split_line(line);
        if (toks.empty() || toks[0].text[0] == '#') continue;
        if (toks.size() != 4) {
            const int col = toks.size() > 4 ? toks[4].column : static_cast<int>(line.size()) + 1;
            throw ParseError("expected 4 fields (frame ped x y), got " +
                                 std::to_string(toks.size()),
                             line_no, col);
        }
        FrameRecord r;
        r.frame_id = parse_int(toks[0], line_no);
        r.ped_id = parse_int(toks[1], line_no);
        r.x = parse_double(toks[2], line_no);
        r.y = parse_double(toks[3], line_no);
        auto [it, inserted] = seen.emplace(std::make_pair(r.frame_id, r.ped_id), line_no);
        if (!inserted) {
            throw ParseError("duplicate (frame, ped) record, first seen at line " +
                                 std::to_string(it->second),
                             line_no, toks[0].column);
        }
        records.push_back(r);
    }
    if (records.empty()) throw EmptyFile("no records in " + path);
    std::stable_sort(records.begin(), records.end(), [](const FrameRecord& a, const FrameRecord& b) {
        return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.ped_id < b.ped_id;
    });
    return records;
}

void write_trajectories(const std::string& path, const std::vector<FrameRecord>& records) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    for (const FrameRecord& r : records) {
        os << r.frame_id << ' ' << r.ped_id << ' ' << fmt(r.x) << ' ' << fmt(r.y) << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

std::vector<TrainingSample> make_windows(const std::vector<FrameRecord>& records, int obs_len,
                                         int pred_len, double radius) {
    const int window = obs_len + pred_len;
    std::vector<TrainingSample> samples;
    if (records.empty()) return samples;

    // Modal gap between consecutive distinct frame ids defines the stride.
    std::set<long long> frame_set;
    for (const FrameRecord& r : records) frame_set.insert(r.frame_id);
    std::vector<long long> frames(frame_set.begin(), frame_set.end());
    if (frames.size() < static_cast<size_t>(window)) return samples;
    std::map<long long, int> gap_counts;
    for (size_t i = 1; i < frames.size(); ++i) ++gap_counts[frames[i] - frames[i - 1]];
    long long stride = 1;
    int best = -1;
    for (const auto& [gap, count] : gap_counts) {
        if (count > best) {
            best = count;
            stride = gap;
        }
    }

    // agent -> (frame -> position)
    std::map<long long, std::unordered_map<long long, Vec2>> tracks;
    for (const FrameRecord& r : records) tracks[r.ped_id][r.frame_id] = Vec2(r.x, r.y);

    auto span_at = [&](const std::unordered_map<long long, Vec2>& track, long long start,
                       int count) -> std::optional<std::vector<Vec2>> {
        std::vector<Vec2> pts;
        pts.reserve(static_cast<size_t>(count));
        for (int k = 0; k < count; ++k) {
            auto it = track.find(start + k * stride);
            if (it == track.end()) return std::nullopt;
            pts.push_back(it->second);
        }
        return pts;
    };

    for (const auto& [agent_id, track] : tracks) {
        std::vector<long long> agent_frames;
        agent_frames.reserve(track.size());
        for (const auto& [f, _] : track) agent_frames.push_back(f);
        std::sort(agent_frames.begin(), agent_frames.end());

        for (long long f0 : agent_frames) {
            const auto full = span_at(track, f0, window);
            if (!full) continue;
            const Vec2 origin = (*full)[static_cast<size_t>(obs_len - 1)];
            TrainingSample s;
            for (int k = 0; k < obs_len; ++k) {
                s.agent_past.row(k) = ((*full)[static_cast<size_t>(k)] - origin).transpose();
            }
            for (int k = 0; k < pred_len; ++k) {
                s.agent_future.row(k) =
                    ((*full)[static_cast<size_t>(obs_len + k)] - origin).transpose();
            }
            s.midpoints = future_midpoints(s.agent_future);
            s.goal = s.agent_future.row(pred_len - 1).transpose();
            s.ego_next = s.agent_future.row(0).transpose();

            const long long current_frame = f0 + (obs_len - 1) * stride;
            for (const auto& [other_id, other_track] : tracks) {
                if (other_id == agent_id) continue;
                auto cur = other_track.find(current_frame);
                if (cur == other_track.end()) continue;
                if ((cur->second - origin).norm() > radius) continue;
                const auto past = span_at(other_track, f0, obs_len);
                if (!past) continue;
                NeighborTrack nb;
                for (int k = 0; k < obs_len; ++k) {
                    nb.past.row(k) = ((*past)[static_cast<size_t>(k)] - origin).transpose();
                }
                const auto future = span_at(other_track, f0 + obs_len * stride, pred_len);
                if (future) {
                    Traj8 fut;
                    for (int k = 0; k < pred_len; ++k) {
                        fut.row(k) = ((*future)[static_cast<size_t>(k)] - origin).transpose();
                    }
                    nb.future = fut;
                }
                s.neighbors.push_back(std::move(nb));
            }
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

SplitResult leave_one_out_split(const NamedRecords& datasets, const std::string& held_out) {
    if (datasets.find(held_out) == datasets.end()) {
        throw UnknownDataset("no dataset named '" + held_out + "'");
    }
    SplitResult split;
    for (const auto& [name, records] : datasets) {
        if (name == held_out) {
            split.test.emplace(name, records);
        } else {
            split.train.emplace(name, records);
        }
    }
    return split;
}

std::vector<FrameRecord> synth_crowd(std::uint64_t seed, int n_agents, double duration_s,
                                     const SynthParams& p) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos_dist(0.7, p.field - 0.7);
    std::uniform_real_distribution<double> speed_dist(p.speed_min, p.speed_max);
    std::normal_distribution<double> jitter(0.0, p.heading_jitter);
    std::uniform_real_distribution<double> cone(-p.cone_half_angle, p.cone_half_angle);
    constexpr double kSpeedCap = 1.6;

    struct Agent {
        Vec2 pos, waypoint, dir;
        double v_pref;
    };
    // Legs biased toward the current heading keep turns gentle; targets that
    // leave the field fold back in billiard-style, so wall turns stay
    // geometric rather than random.
    auto next_waypoint = [&](const Agent& a) {
        const double ang = std::atan2(a.dir.y(), a.dir.x()) + cone(rng);
        Vec2 target = a.pos + p.min_leg * Vec2(std::cos(ang), std::sin(ang));
        const double lo = 0.7, hi = p.field - 0.7;
        for (double* coord : {&target.x(), &target.y()}) {
            while (*coord < lo || *coord > hi) {
                if (*coord < lo) *coord = 2.0 * lo - *coord;
                if (*coord > hi) *coord = 2.0 * hi - *coord;
            }
        }
        return target;
    };

    std::vector<Agent> agents(static_cast<size_t>(n_agents));
    for (Agent& a : agents) {
        a.pos = Vec2(pos_dist(rng), pos_dist(rng));
        a.waypoint = Vec2(pos_dist(rng), pos_dist(rng));
        Vec2 to_wp = a.waypoint - a.pos;
        a.dir = to_wp.norm() > 1e-9 ? Vec2(to_wp.normalized()) : Vec2(1.0, 0.0);
        a.v_pref = speed_dist(rng);
    }

    const int n_frames = std::max(1, static_cast<int>(std::llround(duration_s / p.dt)));
    std::vector<FrameRecord> records;
    records.reserve(static_cast<size_t>(n_frames) * static_cast<size_t>(n_agents));

    for (int f = 0; f < n_frames; ++f) {
        for (int i = 0; i < n_agents; ++i) {
            records.push_back({f, i, agents[static_cast<size_t>(i)].pos.x(),
                               agents[static_cast<size_t>(i)].pos.y()});
        }
        std::vector<Vec2> vel(static_cast<size_t>(n_agents));
        for (int i = 0; i < n_agents; ++i) {
            Agent& a = agents[static_cast<size_t>(i)];
            if ((a.pos - a.waypoint).norm() < p.waypoint_tol) {
                a.waypoint = next_waypoint(a);
            }
            Vec2 desired = a.waypoint - a.pos;
            desired = desired.norm() > 1e-9 ? Vec2(desired.normalized()) : a.dir;
            // Rate-limited steering keeps turns smooth through switches.
            const double cur_ang = std::atan2(a.dir.y(), a.dir.x());
            const double want_ang = std::atan2(desired.y(), desired.x());
            double delta = std::remainder(want_ang - cur_ang, 2.0 * M_PI);
            delta = std::clamp(delta, -p.max_turn_rate, p.max_turn_rate);
            const double ang = cur_ang + delta + jitter(rng);
            a.dir = Vec2(std::cos(ang), std::sin(ang));

            Vec2 v = a.v_pref * a.dir;
            for (int j = 0; j < n_agents; ++j) {
                if (j == i) continue;
                const Vec2 away = a.pos - agents[static_cast<size_t>(j)].pos;
                const double d = away.norm();
                if (d < 1e-9 || d > 4.0) continue;
                const double mag = p.repulsion_gain * std::exp((p.repulsion_radius - d) / p.repulsion_range);
                const Vec2 e = away / d;
                v += mag * e + 0.35 * mag * Vec2(-e.y(), e.x());
            }
            const double speed = v.norm();
            if (speed > kSpeedCap) v *= kSpeedCap / speed;
            vel[static_cast<size_t>(i)] = v;
        }
        for (int i = 0; i < n_agents; ++i) {
            Agent& a = agents[static_cast<size_t>(i)];
            a.pos += vel[static_cast<size_t>(i)] * p.dt;
            a.pos.x() = std::clamp(a.pos.x(), 0.3, p.field - 0.3);
            a.pos.y() = std::clamp(a.pos.y(), 0.3, p.field - 0.3);
        }
    }
    return records;
}

SampleSets make_synthetic_sets(std::uint64_t seed, int n_train, double radius) {
    constexpr int kAgents = 20;
    const double train_duration = (static_cast<double>(n_train) / kAgents + 16.0) * 0.4;
    const double val_duration = (static_cast<double>(n_train) / (8 * kAgents) + 16.0) * 0.4;
    SampleSets sets;
    sets.train = make_windows(synth_crowd(seed, kAgents, train_duration), 8, 8, radius);
    sets.held_out = make_windows(synth_crowd(seed + 1000, kAgents, val_duration), 8, 8, radius);
    if (static_cast<int>(sets.train.size()) > n_train) sets.train.resize(n_train);
    return sets;
}

void save_samples(const std::string& path, const std::vector<TrainingSample>& samples) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open sample cache for writing: " + path);
    os << "SZN_SAMPLES 1\ncount " << samples.size() << '\n';
    auto put_traj = [&](const Traj8& t) {
        for (int i = 0; i < 8; ++i) os << ' ' << fmt(t(i, 0)) << ' ' << fmt(t(i, 1));
        os << '\n';
    };
    for (const TrainingSample& s : samples) {
        os << "sample " << s.neighbors.size() << '\n';
        os << "past";
        put_traj(s.agent_past);
        os << "future";
        put_traj(s.agent_future);
        for (const NeighborTrack& nb : s.neighbors) {
            os << "neighbor " << (nb.future ? 1 : 0) << '\n';
            os << "past";
            put_traj(nb.past);
            if (nb.future) {
                os << "future";
                put_traj(*nb.future);
            }
        }
    }
    if (!os) throw IoError("sample cache write failed: " + path);
}

std::vector<TrainingSample> load_samples(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open sample cache: " + path);
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "SZN_SAMPLES" || version != 1) {
        throw IoError("not a sample cache: " + path);
    }
    std::string tag;
    size_t count = 0;
    if (!(is >> tag >> count) || tag != "count") throw IoError("sample cache: bad count");
    auto get_traj = [&](Traj8& t) {
        for (int i = 0; i < 8; ++i) {
            if (!(is >> t(i, 0) >> t(i, 1))) throw IoError("sample cache: truncated trajectory");
        }
    };
    std::vector<TrainingSample> samples;
    samples.reserve(count);
    for (size_t k = 0; k < count; ++k) {
        size_t n_nb = 0;
        if (!(is >> tag >> n_nb) || tag != "sample") throw IoError("sample cache: bad sample header");
        TrainingSample s;
        if (!(is >> tag) || tag != "past") throw IoError("sample cache: missing past");
        get_traj(s.agent_past);
        if (!(is >> tag) || tag != "future") throw IoError("sample cache: missing future");
        get_traj(s.agent_future);
        s.midpoints = future_midpoints(s.agent_future);
        s.goal = s.agent_future.row(7).transpose();
        s.ego_next = s.agent_future.row(0).transpose();
        for (size_t n = 0; n < n_nb; ++n) {
            int has_future = 0;
            if (!(is >> tag >> has_future) || tag != "neighbor") {
                throw IoError("sample cache: bad neighbor header");
            }
            NeighborTrack nb;
            if (!(is >> tag) || tag != "past") throw IoError("sample cache: missing neighbor past");
            get_traj(nb.past);
            if (has_future) {
                if (!(is >> tag) || tag != "future") {
                    throw IoError("sample cache: missing neighbor future");
                }
                Traj8 fut;
                get_traj(fut);
                nb.future = fut;
            }
            s.neighbors.push_back(std::move(nb));
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace szn
