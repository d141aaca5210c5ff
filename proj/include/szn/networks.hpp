#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "szn/losses.hpp"
#include "szn/nn.hpp"

namespace szn {

inline constexpr int kLatentDim = 16;
inline constexpr int kPastLen = 8;

/// Row-major flattening of an 8x2 trajectory: [x0, y0, x1, y1, ...].
Vec flatten_traj(const Traj8& t);

using ZonoSeq = std::array<Zonotope2, kPredSteps>;

/// Step i reads raw[10i..10i+2) as the center and raw[10i+2..10i+10) as the
/// 2x4 generator block, column-major. encode is the exact inverse.
ZonoSeq decode_zonotopes(const Vec& raw);
Vec encode_zonotopes(const ZonoSeq& seq);

enum class RunMode { kTrain, kInfer };

/**
 * Pedestrian prediction: endpoint-conditioned CVAE over a pedestrian's past
 * (in the ego frame) plus the ego-agent's next displacement, decoding to a
 * 7-step zonotope sequence. In train mode the truth endpoint feeds the
 * posterior encoder and z = mu + sigma .* noise; in infer mode z = noise
 * (pass zeros for the deterministic posterior mean).
 */
struct PpnModel {
    Mlp e_ped;     // 16 -> 32 -> 16, past-trajectory encoder
    Mlp e_end;     // 2 -> 8 -> 16, endpoint encoder (truth and predicted)
    Mlp e_nxt;     // 2 -> 32 -> 16, ego next-step encoder
    Mlp e_latent;  // 48 -> 8 -> 16 -> 32, posterior head (mu | log_var)
    Mlp d_latent;  // 48 -> 32 -> 16 -> 32 -> 2, endpoint decoder
    Mlp p_future;  // 50 -> 32 -> 16 -> 32 -> 70, zonotope decoder
};
PpnModel make_ppn(std::uint64_t seed);

struct PpnGrads {
    MlpGrads e_ped, e_end, e_nxt, e_latent, d_latent, p_future;
};
PpnGrads make_grads(const PpnModel& m);
void zero_grads(PpnGrads& g);
void scale_grads(PpnGrads& g, double s);

struct PpnAdam {
    AdamState e_ped, e_end, e_nxt, e_latent, d_latent, p_future;
};
PpnAdam make_adam_state(const PpnModel& m);
void adam_update(PpnModel& m, const PpnGrads& g, PpnAdam& s, const AdamHyper& h);

struct PpnTape {
    RunMode mode = RunMode::kInfer;
    MlpTape t_ped, t_nxt, t_end_truth, t_latent, t_decode, t_end_pred, t_future;
    Vec cond;        // 32
    Vec latent_raw;  // 32, train mode only
    GaussianLatent latent;
    Vec noise;
    Vec z;
    Vec endpoint;  // 2, predicted
};

struct PpnOutput {
    ZonoSeq zonotopes;
    Vec2 endpoint = Vec2::Zero();
    GaussianLatent latent;  // empty in infer mode
    Vec raw;                // 70
};

PpnOutput ppn_forward(const PpnModel& m, const Traj8& ped_past, const Vec2& ego_next,
                      const std::optional<Vec2>& truth_endpoint, RunMode mode, const Vec& noise,
                      PpnTape* tape = nullptr);

struct PpnInputGrads {
    Vec2 d_ego_next = Vec2::Zero();
};

/// Backprop from d_raw (gradient on the 70-wide output) plus an optional
/// external gradient on the predicted endpoint. kl_weight adds the KL
/// gradient at the latent head (train tapes only).
PpnInputGrads ppn_backward(const PpnModel& m, const PpnTape& tape, const Vec& d_raw,
                           const Vec2& d_endpoint_ext, double kl_weight, PpnGrads& acc);

/**
 * Ego-agent social prediction: CVAE over the aggregated neighbor future
 * feature, the goal, and the ego next displacement; decodes straight to the
 * 7-step zonotope sequence. Neighbor zonotope centers and endpoints are
 * summed over pedestrians before encoding (zeros when nobody is in range).
 */
struct EsnModel {
    Mlp e_goal;    // 2 -> 8 -> 16 -> 2
    Mlp e_future;  // 16 -> 64 -> 32 -> 16, summed neighbor-future encoder
    Mlp e_nxt;     // 2 -> 64 -> 32 -> 2
    Mlp e_traj;    // 16 -> 64 -> 32 -> 16, truth-future encoder (train only)
    Mlp e_latent;  // 36 -> 8 -> 50 -> 32 (head widened to mu+log_var)
    Mlp d_latent;  // 36 -> 128 -> 64 -> 128 -> 70
};
EsnModel make_esn(std::uint64_t seed);

struct EsnGrads {
    MlpGrads e_goal, e_future, e_nxt, e_traj, e_latent, d_latent;
};
EsnGrads make_grads(const EsnModel& m);
void zero_grads(EsnGrads& g);
void scale_grads(EsnGrads& g, double s);

struct EsnAdam {
    AdamState e_goal, e_future, e_nxt, e_traj, e_latent, d_latent;
};
EsnAdam make_adam_state(const EsnModel& m);
void adam_update(EsnModel& m, const EsnGrads& g, EsnAdam& s, const AdamHyper& h);

struct EsnTape {
    RunMode mode = RunMode::kInfer;
    MlpTape t_goal, t_future, t_nxt, t_traj, t_latent, t_decode;
    Vec cond;        // 20
    Vec latent_raw;  // 32, train mode only
    GaussianLatent latent;
    Vec noise;
    Vec z;
};

struct EsnOutput {
    ZonoSeq zonotopes;
    GaussianLatent latent;
    Vec raw;  // 70
};

/// ped_future_feat: 16-wide [summed 7 centers (14) | summed endpoints (2)].
EsnOutput esn_forward(const EsnModel& m, const Vec& ped_future_feat, const Vec2& goal,
                      const Vec2& ego_next, const std::optional<Traj8>& truth_future,
                      RunMode mode, const Vec& noise, EsnTape* tape = nullptr);

struct EsnInputGrads {
    Vec d_ped_future_feat;  // 16
    Vec2 d_ego_next = Vec2::Zero();
};

EsnInputGrads esn_backward(const EsnModel& m, const EsnTape& tape, const Vec& d_raw,
                           double kl_weight, EsnGrads& acc);

/// Sums predicted centers and endpoints over neighbors into the 16-wide
/// E_future input.
Vec ped_future_feature(const std::vector<PpnOutput>& neighbor_predictions);

}  // namespace szn
