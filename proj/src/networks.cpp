#include "szn/networks.hpp"

#include "szn/errors.hpp"

namespace szn {

Vec flatten_traj(const Traj8& t) {
    Vec v(2 * kPastLen);
    for (int i = 0; i < kPastLen; ++i) {
        v(2 * i) = t(i, 0);
        v(2 * i + 1) = t(i, 1);
    }
    return v;
}

ZonoSeq decode_zonotopes(const Vec& raw) {
    if (raw.size() != kRawWidth) throw DimensionMismatch("decode expects a 70-wide vector");
    ZonoSeq seq;
    for (int i = 0; i < kPredSteps; ++i) {
        const int base = i * kRawPerStep;
        Zonotope2 z;
        z.center = Vec2(raw(base), raw(base + 1));
        z.generators.resize(2, kGensPerStep);
        for (int j = 0; j < kGensPerStep; ++j) {
            z.generators(0, j) = raw(base + 2 + 2 * j);
            z.generators(1, j) = raw(base + 2 + 2 * j + 1);
        }
        seq[static_cast<size_t>(i)] = z;
    }
    return seq;
}

Vec encode_zonotopes(const ZonoSeq& seq) {
    Vec raw(kRawWidth);
    for (int i = 0; i < kPredSteps; ++i) {
        const int base = i * kRawPerStep;
        const Zonotope2& z = seq[static_cast<size_t>(i)];
        if (z.generators.cols() != kGensPerStep) {
            throw DimensionMismatch("encode expects 4 generators per step");
        }
        raw(base) = z.center.x();
        raw(base + 1) = z.center.y();
        for (int j = 0; j < kGensPerStep; ++j) {
            raw(base + 2 + 2 * j) = z.generators(0, j);
            raw(base + 2 + 2 * j + 1) = z.generators(1, j);
        }
    }
    return raw;
}

PpnModel make_ppn(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PpnModel m;
    m.e_ped = make_mlp({16, 32, 16}, rng);
    m.e_end = make_mlp({2, 8, 16}, rng);
    m.e_nxt = make_mlp({2, 32, 16}, rng);
    m.e_latent = make_mlp({48, 8, 16, 32}, rng);
    m.d_latent = make_mlp({48, 32, 16, 32, 2}, rng);
    m.p_future = make_mlp({50, 32, 16, 32, kRawWidth}, rng);
    return m;
}

PpnGrads make_grads(const PpnModel& m) {
    return PpnGrads{make_grads(m.e_ped),    make_grads(m.e_end),    make_grads(m.e_nxt),
                    make_grads(m.e_latent), make_grads(m.d_latent), make_grads(m.p_future)};
}

void zero_grads(PpnGrads& g) {
    zero_grads(g.e_ped);
    zero_grads(g.e_end);
    zero_grads(g.e_nxt);
    zero_grads(g.e_latent);
    zero_grads(g.d_latent);
    zero_grads(g.p_future);
}

void scale_grads(PpnGrads& g, double s) {
    scale_grads(g.e_ped, s);
    scale_grads(g.e_end, s);
    scale_grads(g.e_nxt, s);
    scale_grads(g.e_latent, s);
    scale_grads(g.d_latent, s);
    scale_grads(g.p_future, s);
}

PpnAdam make_adam_state(const PpnModel& m) {
    return PpnAdam{make_adam_state(m.e_ped),    make_adam_state(m.e_end),
                   make_adam_state(m.e_nxt),    make_adam_state(m.e_latent),
                   make_adam_state(m.d_latent), make_adam_state(m.p_future)};
}

void adam_update(PpnModel& m, const PpnGrads& g, PpnAdam& s, const AdamHyper& h) {
    adam_update(m.e_ped, g.e_ped, s.e_ped, h);
    adam_update(m.e_end, g.e_end, s.e_end, h);
    adam_update(m.e_nxt, g.e_nxt, s.e_nxt, h);
    adam_update(m.e_latent, g.e_latent, s.e_latent, h);
    adam_update(m.d_latent, g.d_latent, s.d_latent, h);
    adam_update(m.p_future, g.p_future, s.p_future, h);
}

PpnOutput ppn_forward(const PpnModel& m, const Traj8& ped_past, const Vec2& ego_next,
                      const std::optional<Vec2>& truth_endpoint, RunMode mode, const Vec& noise,
                      PpnTape* tape) {
    if (noise.size() != kLatentDim) throw DimensionMismatch("ppn noise must be 16-wide");
    PpnTape local;
    PpnTape& tp = tape ? *tape : local;
    tp.mode = mode;
    tp.noise = noise;

    const Vec h_ped = mlp_forward(m.e_ped, flatten_traj(ped_past), tp.t_ped);
    const Vec h_nxt = mlp_forward(m.e_nxt, Vec(ego_next), tp.t_nxt);
    tp.cond.resize(32);
    tp.cond << h_ped, h_nxt;

    if (mode == RunMode::kTrain) {
        if (!truth_endpoint) throw MissingTruth("ppn train mode needs the truth endpoint");
        const Vec h_end = mlp_forward(m.e_end, Vec(*truth_endpoint), tp.t_end_truth);
        Vec global(48);
        global << tp.cond, h_end;
        tp.latent_raw = mlp_forward(m.e_latent, global, tp.t_latent);
        tp.latent = split_latent(tp.latent_raw);
        tp.z = sample_latent(tp.latent, noise);
    } else {
        tp.z = noise;  // prior draw; zeros give the deterministic mean
    }

    Vec dec_in(48);
    dec_in << tp.cond, tp.z;
    tp.endpoint = mlp_forward(m.d_latent, dec_in, tp.t_decode);

    const Vec h_end_pred = mlp_forward(m.e_end, tp.endpoint, tp.t_end_pred);
    Vec fut_in(50);
    fut_in << tp.cond, h_end_pred, tp.endpoint;
    const Vec raw = mlp_forward(m.p_future, fut_in, tp.t_future);

    PpnOutput out;
    out.raw = raw;
    out.zonotopes = decode_zonotopes(raw);
    out.endpoint = Vec2(tp.endpoint(0), tp.endpoint(1));
    out.latent = tp.latent;
    return out;
}

PpnInputGrads ppn_backward(const PpnModel& m, const PpnTape& tape, const Vec& d_raw,
                           const Vec2& d_endpoint_ext, double kl_weight, PpnGrads& acc) {
    const Vec d_fut_in = mlp_backward(m.p_future, tape.t_future, d_raw, acc.p_future);
    Vec d_cond = d_fut_in.head(32);
    const Vec d_h_end_pred = d_fut_in.segment(32, 16);
    Vec d_endpoint = d_fut_in.tail(2) + Vec(d_endpoint_ext);

    d_endpoint += mlp_backward(m.e_end, tape.t_end_pred, d_h_end_pred, acc.e_end);

    const Vec d_dec_in = mlp_backward(m.d_latent, tape.t_decode, d_endpoint, acc.d_latent);
    d_cond += d_dec_in.head(32);
    const Vec d_z = d_dec_in.tail(kLatentDim);

    if (tape.mode == RunMode::kTrain) {
        // z = mu + exp(lv/2) .* noise; KL gradient joins at the head.
        Vec d_mu = d_z;
        Vec d_lv = 0.5 * (tape.latent.log_var.array() / 2.0).exp() * tape.noise.array() *
                   d_z.array();
        if (kl_weight != 0.0) {
            const KlResult kl = kl_loss(tape.latent);
            d_mu += kl_weight * kl.d_mu;
            d_lv += kl_weight * kl.d_log_var;
        }
        const Vec d_head = latent_backward(tape.latent_raw, d_mu, d_lv);
        const Vec d_global = mlp_backward(m.e_latent, tape.t_latent, d_head, acc.e_latent);
        d_cond += d_global.head(32);
        mlp_backward(m.e_end, tape.t_end_truth, d_global.tail(16), acc.e_end);
    }

    mlp_backward(m.e_ped, tape.t_ped, d_cond.head(16), acc.e_ped);
    const Vec d_next = mlp_backward(m.e_nxt, tape.t_nxt, d_cond.tail(16), acc.e_nxt);
    return PpnInputGrads{Vec2(d_next(0), d_next(1))};
}

EsnModel make_esn(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EsnModel m;
    m.e_goal = make_mlp({2, 8, 16, 2}, rng);
    m.e_future = make_mlp({16, 64, 32, 16}, rng);
    m.e_nxt = make_mlp({2, 64, 32, 2}, rng);
    m.e_traj = make_mlp({16, 64, 32, 16}, rng);
    m.e_latent = make_mlp({36, 8, 50, 32}, rng);
    m.d_latent = make_mlp({36, 128, 64, 128, kRawWidth}, rng);
    return m;
}

EsnGrads make_grads(const EsnModel& m) {
    return EsnGrads{make_grads(m.e_goal), make_grads(m.e_future), make_grads(m.e_nxt),
                    make_grads(m.e_traj), make_grads(m.e_latent), make_grads(m.d_latent)};
}

void zero_grads(EsnGrads& g) {
    zero_grads(g.e_goal);
    zero_grads(g.e_future);
    zero_grads(g.e_nxt);
    zero_grads(g.e_traj);
    zero_grads(g.e_latent);
    zero_grads(g.d_latent);
}

void scale_grads(EsnGrads& g, double s) {
    scale_grads(g.e_goal, s);
    scale_grads(g.e_future, s);
    scale_grads(g.e_nxt, s);
    scale_grads(g.e_traj, s);
    scale_grads(g.e_latent, s);
    scale_grads(g.d_latent, s);
}

EsnAdam make_adam_state(const EsnModel& m) {
    return EsnAdam{make_adam_state(m.e_goal), make_adam_state(m.e_future),
                   make_adam_state(m.e_nxt),  make_adam_state(m.e_traj),
                   make_adam_state(m.e_latent), make_adam_state(m.d_latent)};
}

void adam_update(EsnModel& m, const EsnGrads& g, EsnAdam& s, const AdamHyper& h) {
    adam_update(m.e_goal, g.e_goal, s.e_goal, h);
    adam_update(m.e_future, g.e_future, s.e_future, h);
    adam_update(m.e_nxt, g.e_nxt, s.e_nxt, h);
    adam_update(m.e_traj, g.e_traj, s.e_traj, h);
    adam_update(m.e_latent, g.e_latent, s.e_latent, h);
    adam_update(m.d_latent, g.d_latent, s.d_latent, h);
}

EsnOutput esn_forward(const EsnModel& m, const Vec& ped_future_feat, const Vec2& goal,
                      const Vec2& ego_next, const std::optional<Traj8>& truth_future,
                      RunMode mode, const Vec& noise, EsnTape* tape) {
    if (ped_future_feat.size() != 16) throw DimensionMismatch("esn future feature must be 16-wide");
    if (noise.size() != kLatentDim) throw DimensionMismatch("esn noise must be 16-wide");
    EsnTape local;
    EsnTape& tp = tape ? *tape : local;
    tp.mode = mode;
    tp.noise = noise;

    const Vec h_fut = mlp_forward(m.e_future, ped_future_feat, tp.t_future);
    const Vec h_goal = mlp_forward(m.e_goal, Vec(goal), tp.t_goal);
    const Vec h_nxt = mlp_forward(m.e_nxt, Vec(ego_next), tp.t_nxt);
    tp.cond.resize(20);
    tp.cond << h_fut, h_goal, h_nxt;

    if (mode == RunMode::kTrain) {
        if (!truth_future) throw MissingTruth("esn train mode needs the truth future");
        const Vec h_traj = mlp_forward(m.e_traj, flatten_traj(*truth_future), tp.t_traj);
        Vec global(36);
        global << tp.cond, h_traj;
        tp.latent_raw = mlp_forward(m.e_latent, global, tp.t_latent);
        tp.latent = split_latent(tp.latent_raw);
        tp.z = sample_latent(tp.latent, noise);
    } else {
        tp.z = noise;
    }

    Vec dec_in(36);
    dec_in << tp.cond, tp.z;
    const Vec raw = mlp_forward(m.d_latent, dec_in, tp.t_decode);

    EsnOutput out;
    out.raw = raw;
    out.zonotopes = decode_zonotopes(raw);
    out.latent = tp.latent;
    return out;
}

EsnInputGrads esn_backward(const EsnModel& m, const EsnTape& tape, const Vec& d_raw,
                           double kl_weight, EsnGrads& acc) {
    const Vec d_dec_in = mlp_backward(m.d_latent, tape.t_decode, d_raw, acc.d_latent);
    Vec d_cond = d_dec_in.head(20);
    const Vec d_z = d_dec_in.tail(kLatentDim);

    if (tape.mode == RunMode::kTrain) {
        Vec d_mu = d_z;
        Vec d_lv = 0.5 * (tape.latent.log_var.array() / 2.0).exp() * tape.noise.array() *
                   d_z.array();
        if (kl_weight != 0.0) {
            const KlResult kl = kl_loss(tape.latent);
            d_mu += kl_weight * kl.d_mu;
            d_lv += kl_weight * kl.d_log_var;
        }
        const Vec d_head = latent_backward(tape.latent_raw, d_mu, d_lv);
        const Vec d_global = mlp_backward(m.e_latent, tape.t_latent, d_head, acc.e_latent);
        d_cond += d_global.head(20);
        mlp_backward(m.e_traj, tape.t_traj, d_global.tail(16), acc.e_traj);
    }

    EsnInputGrads in;
    in.d_ped_future_feat = mlp_backward(m.e_future, tape.t_future, d_cond.head(16), acc.e_future);
    mlp_backward(m.e_goal, tape.t_goal, d_cond.segment(16, 2), acc.e_goal);
    const Vec d_next = mlp_backward(m.e_nxt, tape.t_nxt, d_cond.tail(2), acc.e_nxt);
    in.d_ego_next = Vec2(d_next(0), d_next(1));
    return in;
}

Vec ped_future_feature(const std::vector<PpnOutput>& neighbor_predictions) {
    Vec feat = Vec::Zero(16);
    for (const PpnOutput& p : neighbor_predictions) {
        for (int i = 0; i < kPredSteps; ++i) {
            feat(2 * i) += p.zonotopes[static_cast<size_t>(i)].center.x();
            feat(2 * i + 1) += p.zonotopes[static_cast<size_t>(i)].center.y();
        }
        feat(14) += p.endpoint.x();
        feat(15) += p.endpoint.y();
    }
    return feat;
}

}  // namespace szn
