#include <doctest.h>

#include <random>

#include "szn/errors.hpp"
#include "szn/networks.hpp"

using namespace szn;

namespace {

Traj8 walk(std::mt19937_64& rng, double step = 0.4) {
    std::normal_distribution<double> d(0.0, 1.0);
    Traj8 t;
    Vec2 p(d(rng), d(rng));
    for (int i = 0; i < 8; ++i) {
        t.row(i) = p.transpose();
        p += Vec2(step * (0.8 + 0.2 * d(rng)), 0.3 * step * d(rng));
    }
    return t;
}

Vec normal_vec(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> d(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

}  // namespace

TEST_CASE("ppn emits 7 four-generator zonotopes and an endpoint") {
    std::mt19937_64 rng(1);
    const PpnModel m = make_ppn(10);
    const PpnOutput out = ppn_forward(m, walk(rng), Vec2(0.3, 0.0), std::nullopt,
                                      RunMode::kInfer, Vec::Zero(kLatentDim));
    CHECK(out.raw.size() == kRawWidth);
    for (const Zonotope2& z : out.zonotopes) CHECK(z.num_generators() == kGensPerStep);
    CHECK(out.endpoint.allFinite());
}

TEST_CASE("ppn infer mode with zero noise is bit-deterministic") {
    std::mt19937_64 rng(2);
    const PpnModel m = make_ppn(11);
    const Traj8 past = walk(rng);
    const PpnOutput a =
        ppn_forward(m, past, Vec2(0.2, 0.1), std::nullopt, RunMode::kInfer, Vec::Zero(16));
    const PpnOutput b =
        ppn_forward(m, past, Vec2(0.2, 0.1), std::nullopt, RunMode::kInfer, Vec::Zero(16));
    CHECK((a.raw - b.raw).norm() == 0.0);
    CHECK((a.endpoint - b.endpoint).norm() == 0.0);
}

TEST_CASE("ppn train mode requires the truth endpoint") {
    std::mt19937_64 rng(3);
    const PpnModel m = make_ppn(12);
    CHECK_THROWS_AS(ppn_forward(m, walk(rng), Vec2(0.2, 0.0), std::nullopt, RunMode::kTrain,
                                Vec::Zero(16)),
                    MissingTruth);
}

TEST_CASE("esn accepts an all-zero neighbor feature") {
    const EsnModel m = make_esn(13);
    const EsnOutput out = esn_forward(m, Vec::Zero(16), Vec2(3.0, 3.0), Vec2(0.3, 0.0),
                                      std::nullopt, RunMode::kInfer, Vec::Zero(16));
    CHECK(out.raw.size() == kRawWidth);
    for (const Zonotope2& z : out.zonotopes) {
        CHECK(z.center.allFinite());
        CHECK(z.num_generators() == kGensPerStep);
    }
}

TEST_CASE("esn train mode requires the truth future") {
    const EsnModel m = make_esn(14);
    CHECK_THROWS_AS(esn_forward(m, Vec::Zero(16), Vec2(1, 1), Vec2(0.2, 0), std::nullopt,
                                RunMode::kTrain, Vec::Zero(16)),
                    MissingTruth);
}

TEST_CASE("ped_future_feature sums centers and endpoints") {
    PpnOutput a, b;
    a.raw = Vec::Zero(kRawWidth);
    b.raw = Vec::Zero(kRawWidth);
    for (int i = 0; i < kPredSteps; ++i) {
        a.zonotopes[i].center = Vec2(1.0, 2.0);
        b.zonotopes[i].center = Vec2(-0.5, i);
    }
    a.endpoint = Vec2(3.0, 0.0);
    b.endpoint = Vec2(1.0, 1.0);
    const Vec feat = ped_future_feature({a, b});
    for (int i = 0; i < kPredSteps; ++i) {
        CHECK(feat(2 * i) == doctest::Approx(0.5));
        CHECK(feat(2 * i + 1) == doctest::Approx(2.0 + i));
    }
    CHECK(feat(14) == doctest::Approx(4.0));
    CHECK(feat(15) == doctest::Approx(1.0));
}

TEST_CASE("ppn training gradient matches finite differences for every weight") {
    std::mt19937_64 rng(4);
    PpnModel m = make_ppn(20);
    const Traj8 past = walk(rng);
    const Traj8 future = walk(rng);
    const Vec2 ego_next(0.35, 0.05);
    const Vec2 truth_ep = future.row(7).transpose();
    const Vec2 anchor = past.row(7).transpose();
    const Vec noise = normal_vec(rng, kLatentDim);
    const LossWeights w;

    auto loss_at = [&]() {
        PpnTape tape;
        const PpnOutput out = ppn_forward(m, past, ego_next, truth_ep, RunMode::kTrain, noise, &tape);
        const ZonoLossResult zl = zonotope_losses(out.raw, future, anchor, 0.1, 0.005, w, false);
        return zl.terms.total + kl_loss(tape.latent).value;
    };

    PpnTape tape;
    const PpnOutput out = ppn_forward(m, past, ego_next, truth_ep, RunMode::kTrain, noise, &tape);
    const ZonoLossResult zl = zonotope_losses(out.raw, future, anchor, 0.1, 0.005, w, true);
    PpnGrads grads = make_grads(m);
    ppn_backward(m, tape, zl.d_raw, Vec2::Zero(), 1.0, grads);

    const double h = 1e-5;
    int checked = 0;
    int skipped = 0;
    auto sweep = [&](Mlp& net, MlpGrads& g) {
        for (size_t l = 0; l < net.weights.size(); ++l) {
            for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
                double& p = net.weights[l].data()[i];
                const double saved = p;
                p = saved + h;
                const double lp = loss_at();
                p = saved - h;
                const double lm = loss_at();
                p = saved;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = g.d_weights[l].data()[i];
                if (std::max(std::abs(fd), std::abs(an)) < 1e-9) {
                    ++skipped;  // dead path: both sides vanish
                    continue;
                }
                CHECK(std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)) < 1e-4);
                ++checked;
            }
            for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
                double& p = net.biases[l].data()[i];
                const double saved = p;
                p = saved + h;
                const double lp = loss_at();
                p = saved - h;
                const double lm = loss_at();
                p = saved;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = g.d_biases[l].data()[i];
                if (std::max(std::abs(fd), std::abs(an)) < 1e-9) {
                    ++skipped;
                    continue;
                }
                CHECK(std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)) < 1e-4);
                ++checked;
            }
        }
    };
    sweep(m.e_ped, grads.e_ped);
    sweep(m.e_end, grads.e_end);
    sweep(m.e_nxt, grads.e_nxt);
    sweep(m.e_latent, grads.e_latent);
    sweep(m.d_latent, grads.d_latent);
    sweep(m.p_future, grads.p_future);
    CHECK(checked > 4000);  // the sweep must exercise the bulk of the parameters
}

TEST_CASE("esn training gradient matches finite differences on sampled weights") {
    std::mt19937_64 rng(6);
    EsnModel m = make_esn(21);
    const Vec feat = normal_vec(rng, 16);
    const Vec2 goal(2.5, 1.0);
    const Vec2 ego_next(0.3, -0.05);
    const Traj8 future = walk(rng);
    const Vec noise = normal_vec(rng, kLatentDim);
    const LossWeights w;

    auto loss_at = [&]() {
        EsnTape tape;
        const EsnOutput out = esn_forward(m, feat, goal, ego_next, future, RunMode::kTrain, noise, &tape);
        const ZonoLossResult zl = zonotope_losses(out.raw, future, Vec2::Zero(), 0.1, 0.005, w, false);
        return zl.terms.total + kl_loss(tape.latent).value;
    };

    EsnTape tape;
    const EsnOutput out = esn_forward(m, feat, goal, ego_next, future, RunMode::kTrain, noise, &tape);
    const ZonoLossResult zl = zonotope_losses(out.raw, future, Vec2::Zero(), 0.1, 0.005, w, true);
    EsnGrads grads = make_grads(m);
    esn_backward(m, tape, zl.d_raw, 1.0, grads);

    const double h = 1e-5;
    std::vector<std::pair<Mlp*, MlpGrads*>> nets = {
        {&m.e_goal, &grads.e_goal},   {&m.e_future, &grads.e_future},
        {&m.e_nxt, &grads.e_nxt},     {&m.e_traj, &grads.e_traj},
        {&m.e_latent, &grads.e_latent}, {&m.d_latent, &grads.d_latent}};
    std::uniform_int_distribution<int> net_pick(0, static_cast<int>(nets.size()) - 1);
    int checked = 0;
    for (int probe = 0; probe < 2500; ++probe) {
        auto [net, g] = nets[static_cast<size_t>(net_pick(rng))];
        std::uniform_int_distribution<size_t> layer_pick(0, net->weights.size() - 1);
        const size_t l = layer_pick(rng);
        std::uniform_int_distribution<Eigen::Index> idx_pick(0, net->weights[l].size() - 1);
        const Eigen::Index i = idx_pick(rng);
        double& p = net->weights[l].data()[i];
        const double saved = p;
        p = saved + h;
        const double lp = loss_at();
        p = saved - h;
        const double lm = loss_at();
        p = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = g->d_weights[l].data()[i];
        if (std::max(std::abs(fd), std::abs(an)) < 1e-9) continue;
        CHECK(std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)) < 1e-4);
        ++checked;
    }
    CHECK(checked > 800);
}

TEST_CASE("ppn backward returns the conditioning gradient through e_nxt") {
    std::mt19937_64 rng(8);
    PpnModel m = make_ppn(22);
    const Traj8 past = walk(rng);
    const Vec2 ego_next(0.3, 0.0);
    PpnTape tape;
    const PpnOutput out =
        ppn_forward(m, past, ego_next, std::nullopt, RunMode::kInfer, Vec::Zero(16), &tape);
    const Vec d_raw = normal_vec(rng, kRawWidth);
    PpnGrads grads = make_grads(m);
    const PpnInputGrads in = ppn_backward(m, tape, d_raw, Vec2::Zero(), 0.0, grads);

    // Finite differences on the scalar d_raw . raw(ego_next).
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
        Vec2 ep = ego_next, em = ego_next;
        ep(i) += h;
        em(i) -= h;
        const Vec rp = ppn_forward(m, past, ep, std::nullopt, RunMode::kInfer, Vec::Zero(16)).raw;
        const Vec rm = ppn_forward(m, past, em, std::nullopt, RunMode::kInfer, Vec::Zero(16)).raw;
        const double fd = d_raw.dot(rp - rm) / (2.0 * h);
        CHECK(std::abs(fd - in.d_ego_next(i)) /
                  std::max({std::abs(fd), std::abs(in.d_ego_next(i)), 1e-8}) <
              1e-4);
    }
}
