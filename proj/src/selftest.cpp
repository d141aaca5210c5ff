#include "szn/selftest.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "szn/geometry.hpp"
#include "szn/lip.hpp"
#include "szn/networks.hpp"
#include "szn/oracle.hpp"

namespace szn {

namespace {

Zonotope2 random_zonotope(std::mt19937_64& rng, int min_gens = 1, int max_gens = 8) {
    std::uniform_int_distribution<int> n_dist(min_gens, max_gens);
    std::uniform_real_distribution<double> c_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> g_dist(-1.0, 1.0);
    const int n = n_dist(rng);
    Zonotope2 z;
    z.center = Vec2(c_dist(rng), c_dist(rng));
    z.generators.resize(2, n);
    for (int i = 0; i < n; ++i) {
        Vec2 g;
        do {
            g = Vec2(g_dist(rng), g_dist(rng));
        } while (g.norm() < 1e-6);
        z.generators.col(i) = g;
    }
    return z;
}

Traj8 random_walk(std::mt19937_64& rng, double step_scale) {
    std::normal_distribution<double> n(0.0, 1.0);
    Traj8 t;
    Vec2 p(n(rng), n(rng));
    for (int i = 0; i < 8; ++i) {
        t.row(i) = p.transpose();
        p += Vec2(step_scale * (0.8 + 0.2 * n(rng)), step_scale * 0.3 * n(rng));
    }
    return t;
}

}  // namespace

CheckResult check_geometry_oracle(int pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    int disagreements = 0;
    int skipped_close = 0;
    for (int k = 0; k < pairs; ++k) {
        const Zonotope2 a = random_zonotope(rng);
        const Zonotope2 b = random_zonotope(rng);
        const auto pa = oracle::zonotope_polygon(a.center, a.generators);
        const auto pb = oracle::zonotope_polygon(b.center, b.generators);
        const double sep = oracle::sat_separation(pa, pb);
        if (std::abs(sep) < 1e-9) {
            ++skipped_close;
            continue;
        }
        const bool oracle_hit = sep <= 0.0;
        const bool lib_hit = intersects(a, b);
        if (oracle_hit != lib_hit) ++disagreements;
    }
    std::ostringstream os;
    os << pairs << " pairs, " << disagreements << " disagreements, " << skipped_close
       << " near-degenerate skipped";
    return {disagreements == 0, os.str()};
}

CheckResult check_halfspace(int n_zonos, int pts_per_zono, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> beta_dist(-1.0, 1.0);
    std::uniform_real_distribution<double> ang_dist(0.0, 2.0 * M_PI);
    int interior_fail = 0;
    int exterior_fail = 0;
    try {
        for (int k = 0; k < n_zonos; ++k) {
            const Zonotope2 z = random_zonotope(rng);
            const int n = z.num_generators();
            for (int s = 0; s < pts_per_zono; ++s) {
                Vec2 p = z.center;
                for (int i = 0; i < n; ++i) p += beta_dist(rng) * z.generators.col(i);
                if (!contains_point(z, p)) ++interior_fail;
            }
            const double ang = ang_dist(rng);
            const Vec2 dir(std::cos(ang), std::sin(ang));
            const double radius = oracle::support_radius(z.generators, dir);
            const Vec2 outside = z.center + (1.0 + 1e-3) * radius * dir;
            if (contains_point(z, outside)) ++exterior_fail;
        }
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
    std::ostringstream os;
    os << n_zonos << "x" << pts_per_zono << " interior points, " << interior_fail
       << " wrongly outside; " << n_zonos << " support pushes, " << exterior_fail
       << " wrongly inside";
    return {interior_fail == 0 && exterior_fail == 0, os.str()};
}

CheckResult check_lip_rk4(int draws, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> v_dist(-1.5, 1.5);
    std::uniform_real_distribution<double> u_dist(-0.4, 0.4);
    LipParams p;  // T = 0.4 s, H = 1.0 m
    double worst_dx = 0.0;
    double worst_v = 0.0;
    for (int k = 0; k < draws; ++k) {
        RobotState x;
        x.v_loc = v_dist(rng);
        ControlInput u{u_dist(rng), 0.0};
        const RobotState next = lip_step(x, u, p);
        const auto ode = oracle::rk4_lip(x.v_loc, u.u_f, p.omega(), p.T);
        worst_dx = std::max(worst_dx, std::abs(next.x - ode.dx));
        worst_v = std::max(worst_v, std::abs(next.v_loc - ode.v));
    }
    std::ostringstream os;
    os << draws << " draws, max |dx| err " << worst_dx << " m, max |v| err " << worst_v << " m/s";
    return {worst_dx < 1e-6 && worst_v < 1e-6, os.str()};
}

namespace {

// Parameter vector views over a whole model.
template <typename Model>
std::vector<Mlp*> nets(Model& m);

template <>
std::vector<Mlp*> nets(PpnModel& m) {
    return {&m.e_ped, &m.e_end, &m.e_nxt, &m.e_latent, &m.d_latent, &m.p_future};
}

template <>
std::vector<Mlp*> nets(EsnModel& m) {
    return {&m.e_goal, &m.e_future, &m.e_nxt, &m.e_traj, &m.e_latent, &m.d_latent};
}

template <typename Model>
Eigen::VectorXd flatten_params(Model& m) {
    std::vector<double> out;
    for (Mlp* net : nets(m)) {
        for (size_t l = 0; l < net->weights.size(); ++l) {
            const Mat& w = net->weights[l];
            out.insert(out.end(), w.data(), w.data() + w.size());
            const Vec& b = net->biases[l];
            out.insert(out.end(), b.data(), b.data() + b.size());
        }
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

template <typename Model>
void unflatten_params(Model& m, const Eigen::VectorXd& flat) {
    Eigen::Index at = 0;
    for (Mlp* net : nets(m)) {
        for (size_t l = 0; l < net->weights.size(); ++l) {
            Mat& w = net->weights[l];
            std::copy(flat.data() + at, flat.data() + at + w.size(), w.data());
            at += w.size();
            Vec& b = net->biases[l];
            std::copy(flat.data() + at, flat.data() + at + b.size(), b.data());
            at += b.size();
        }
    }
}

Eigen::VectorXd flatten_ppn_grads(const PpnGrads& g) {
    std::vector<double> out;
    for (const MlpGrads* mg :
         {&g.e_ped, &g.e_end, &g.e_nxt, &g.e_latent, &g.d_latent, &g.p_future}) {
        for (size_t l = 0; l < mg->d_weights.size(); ++l) {
            const Mat& w = mg->d_weights[l];
            out.insert(out.end(), w.data(), w.data() + w.size());
            const Vec& b = mg->d_biases[l];
            out.insert(out.end(), b.data(), b.data() + b.size());
        }
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd flatten_esn_grads(const EsnGrads& g) {
    std::vector<double> out;
    for (const MlpGrads* mg :
         {&g.e_goal, &g.e_future, &g.e_nxt, &g.e_traj, &g.e_latent, &g.d_latent}) {
        for (size_t l = 0; l < mg->d_weights.size(); ++l) {
            const Mat& w = mg->d_weights[l];
            out.insert(out.end(), w.data(), w.data() + w.size());
            const Vec& b = mg->d_biases[l];
            out.insert(out.end(), b.data(), b.data() + b.size());
        }
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace

CheckResult check_network_gradients(int probes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> ndist(0.0, 1.0);
    const double h = 1e-5;
    const LossWeights weights;
    double worst = 0.0;
    int checked = 0;

    auto normal_vec = [&](int n) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = ndist(rng);
        return v;
    };

    for (int probe = 0; probe < probes; ++probe) {
        // --- pedestrian network probe ---
        {
            PpnModel model = make_ppn(seed * 997 + probe);
            const Traj8 past = random_walk(rng, 0.4);
            const Traj8 future = random_walk(rng, 0.4);
            const Vec2 ego_next(0.3 + 0.1 * ndist(rng), 0.1 * ndist(rng));
            const Vec2 truth_ep = future.row(7).transpose();
            const Vec2 anchor = past.row(7).transpose();
            const Vec noise = normal_vec(kLatentDim);

            auto loss_at = [&](PpnModel& m) {
                PpnTape tape;
                const PpnOutput out =
                    ppn_forward(m, past, ego_next, truth_ep, RunMode::kTrain, noise, &tape);
                const ZonoLossResult zl =
                    zonotope_losses(out.raw, future, anchor, 0.1, 0.005, weights, false);
                return zl.terms.total + weights.kl * kl_loss(tape.latent).value;
            };

            PpnTape tape;
            const PpnOutput out =
                ppn_forward(model, past, ego_next, truth_ep, RunMode::kTrain, noise, &tape);
            const ZonoLossResult zl =
                zonotope_losses(out.raw, future, anchor, 0.1, 0.005, weights, true);
            PpnGrads grads = make_grads(model);
            ppn_backward(model, tape, zl.d_raw, Vec2::Zero(), weights.kl, grads);
            const Eigen::VectorXd g = flatten_ppn_grads(grads);

            Eigen::VectorXd p0 = flatten_params(model);
            Eigen::VectorXd dir(p0.size());
            for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = ndist(rng);
            dir.normalize();

            unflatten_params(model, Eigen::VectorXd(p0 + h * dir));
            const double lp = loss_at(model);
            unflatten_params(model, Eigen::VectorXd(p0 - h * dir));
            const double lm = loss_at(model);
            const double fd = (lp - lm) / (2.0 * h);
            const double an = g.dot(dir);
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            worst = std::max(worst, rel);
            ++checked;
        }

        // --- ego network probe ---
        {
            EsnModel model = make_esn(seed * 1409 + probe);
            const Vec feat = normal_vec(16);
            const Vec2 goal(2.0 + ndist(rng), 2.0 + ndist(rng));
            const Vec2 ego_next(0.3 + 0.1 * ndist(rng), 0.1 * ndist(rng));
            const Traj8 future = random_walk(rng, 0.4);
            const Vec noise = normal_vec(kLatentDim);

            auto loss_at = [&](EsnModel& m) {
                EsnTape tape;
                const EsnOutput out =
                    esn_forward(m, feat, goal, ego_next, future, RunMode::kTrain, noise, &tape);
                const ZonoLossResult zl =
                    zonotope_losses(out.raw, future, Vec2::Zero(), 0.1, 0.005, weights, false);
                return zl.terms.total + weights.kl * kl_loss(tape.latent).value;
            };

            EsnTape tape;
            const EsnOutput out =
                esn_forward(model, feat, goal, ego_next, future, RunMode::kTrain, noise, &tape);
            const ZonoLossResult zl =
                zonotope_losses(out.raw, future, Vec2::Zero(), 0.1, 0.005, weights, true);
            EsnGrads grads = make_grads(model);
            esn_backward(model, tape, zl.d_raw, weights.kl, grads);
            const Eigen::VectorXd g = flatten_esn_grads(grads);

            Eigen::VectorXd p0 = flatten_params(model);
            Eigen::VectorXd dir(p0.size());
            for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = ndist(rng);
            dir.normalize();

            unflatten_params(model, Eigen::VectorXd(p0 + h * dir));
            const double lp = loss_at(model);
            unflatten_params(model, Eigen::VectorXd(p0 - h * dir));
            const double lm = loss_at(model);
            const double fd = (lp - lm) / (2.0 * h);
            const double an = g.dot(dir);
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            worst = std::max(worst, rel);
            ++checked;
        }
    }

    std::ostringstream os;
    os << checked << " probes, worst relative error " << worst;
    return {worst < 1e-4, os.str()};
}

}  // namespace szn
