#pragma once

#include <Eigen/Core>

#include "szn/geometry.hpp"

namespace szn {

/// Network outputs cover 7 future walking steps; each step decodes to a
/// center (2) plus a 2x4 generator block, 10 numbers per step.
inline constexpr int kPredSteps = 7;
inline constexpr int kGensPerStep = 4;
inline constexpr int kRawPerStep = 10;
inline constexpr int kRawWidth = kPredSteps * kRawPerStep;

using Traj8 = Eigen::Matrix<double, 8, 2>;
using Mid7 = Eigen::Matrix<double, 7, 2>;

/// midpoints.row(i) = (future.row(i) + future.row(i+1)) / 2.
Mid7 future_midpoints(const Traj8& future);

struct LossWeights {
    double ade = 1.0;
    double fde = 1.0;
    double prev = 1.0;
    double nxt = 1.0;
    double size = 1.0;
    double kl = 1.0;
};

struct LossBreakdown {
    double l_ade = 0.0;
    double l_fde = 0.0;
    double l_prev = 0.0;
    double l_nxt = 0.0;
    double l_g = 0.0;
    double l_kl = 0.0;
    double total = 0.0;
};

double weighted_total(const LossBreakdown& b, const LossWeights& w);

/**
 * The zonotope shaping terms evaluated on a raw 70-wide network output:
 * center tracking of the truth midpoints (ADE/FDE), containment of the
 * inter-center midpoints via a differentiable half-space conversion
 * (prev/nxt), and generator-length regulation toward (d1, d2, d2, d2).
 *
 * `origin` anchors the i = 0 "previous center" (the predicted agent's
 * current position in the working frame). The half-space conversion guards
 * generator norms with sqrt(|g|^2 + 1e-12) so gradients stay finite at
 * degenerate generators. `d_raw` is the weighted gradient of the terms
 * w.r.t. the raw vector (empty when with_grad is false); l_kl stays 0 here.
 */
struct ZonoLossResult {
    LossBreakdown terms;
    Eigen::VectorXd d_raw;
};

ZonoLossResult zonotope_losses(const Eigen::VectorXd& raw, const Traj8& truth_future,
                               const Vec2& origin, double d1, double d2,
                               const LossWeights& w = {}, bool with_grad = true);

}  // namespace szn
