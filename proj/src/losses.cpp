#include "szn/losses.hpp"

#include <cmath>

#include "szn/errors.hpp"

namespace szn {

namespace {

constexpr double kNormGuard = 1e-12;  // under the sqrt of the half-space norms
constexpr double kDivGuard = 1e-12;   // denominators of a.e. gradients

double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

struct StepView {
    Vec2 center;
    Eigen::Matrix<double, 2, kGensPerStep> gens;
};

StepView read_step(const Eigen::VectorXd& raw, int i) {
    StepView s;
    const int base = i * kRawPerStep;
    s.center = Vec2(raw(base), raw(base + 1));
    for (int j = 0; j < kGensPerStep; ++j) {
        s.gens.col(j) = Vec2(raw(base + 2 + 2 * j), raw(base + 2 + 2 * j + 1));
    }
    return s;
}

void add_center_grad(Eigen::VectorXd& d_raw, int i, const Vec2& g) {
    d_raw(i * kRawPerStep) += g.x();
    d_raw(i * kRawPerStep + 1) += g.y();
}

void add_gen_grad(Eigen::VectorXd& d_raw, int i, int j, const Vec2& g) {
    d_raw(i * kRawPerStep + 2 + 2 * j) += g.x();
    d_raw(i * kRawPerStep + 2 + 2 * j + 1) += g.y();
}

// Slack of point (center + r) against the smoothed half-space rows of
// (center, gens): sum_j ReLU(n_j.r - w_j) + ReLU(-n_j.r - w_j) with
// w_j = sum_k |n_j.g_k|. Gradients accumulate into d_r / d_gens scaled by wt.
double containment_penalty(const Eigen::Matrix<double, 2, kGensPerStep>& gens, const Vec2& r,
                           double wt, bool with_grad, Vec2* d_r,
                           Eigen::Matrix<double, 2, kGensPerStep>* d_gens) {
    double pen = 0.0;
    for (int j = 0; j < kGensPerStep; ++j) {
        const Vec2 g = gens.col(j);
        const double len = std::sqrt(g.squaredNorm() + kNormGuard);
        const Vec2 n(-g.y() / len, g.x() / len);
        const double u = n.dot(r);
        double w = 0.0;
        for (int k = 0; k < kGensPerStep; ++k) w += std::abs(n.dot(gens.col(k)));
        const double pos = u - w;
        const double neg = -u - w;
        if (pos > 0.0) pen += pos;
        if (neg > 0.0) pen += neg;
        if (!with_grad) continue;

        const double coef_u = (pos > 0.0 ? 1.0 : 0.0) - (neg > 0.0 ? 1.0 : 0.0);
        const double coef_w = -((pos > 0.0 ? 1.0 : 0.0) + (neg > 0.0 ? 1.0 : 0.0));
        if (coef_u == 0.0 && coef_w == 0.0) continue;

        *d_r += wt * coef_u * n;
        Vec2 d_n = coef_u * r;
        for (int k = 0; k < kGensPerStep; ++k) {
            const double s = sgn(n.dot(gens.col(k)));
            d_n += coef_w * s * gens.col(k);
            d_gens->col(k) += wt * coef_w * s * n;
        }
        // n = R g / len with R = [[0,-1],[1,0]]; chain through the normal.
        const Vec2 rt_dn(d_n.y(), -d_n.x());  // R^T d_n
        d_gens->col(j) += wt * (rt_dn / len - g * (n.dot(d_n)) / (len * len));
    }
    return pen;
}

}  // namespace

Mid7 future_midpoints(const Traj8& future) {
    Mid7 mid;
    for (int i = 0; i < kPredSteps; ++i) {
        mid.row(i) = 0.5 * (future.row(i) + future.row(i + 1));
    }
    return mid;
}

double weighted_total(const LossBreakdown& b, const LossWeights& w) {
    return w.kl * b.l_kl + w.ade * b.l_ade + w.fde * b.l_fde + w.prev * b.l_prev +
           w.nxt * b.l_nxt + w.size * b.l_g;
}

ZonoLossResult zonotope_losses(const Eigen::VectorXd& raw, const Traj8& truth_future,
                               const Vec2& origin, double d1, double d2, const LossWeights& w,
                               bool with_grad) {
    if (raw.size() != kRawWidth) {
        throw DimensionMismatch("zonotope loss expects a 70-wide raw vector");
    }
    const Mid7 mid = future_midpoints(truth_future);

    ZonoLossResult out;
    if (with_grad) out.d_raw = Eigen::VectorXd::Zero(kRawWidth);

    StepView steps[kPredSteps];
    for (int i = 0; i < kPredSteps; ++i) steps[i] = read_step(raw, i);

    // ADE / FDE against the truth midpoints.
    for (int i = 0; i < kPredSteps; ++i) {
        const Vec2 diff = steps[i].center - Vec2(mid(i, 0), mid(i, 1));
        const double dist = diff.norm();
        out.terms.l_ade += dist / kPredSteps;
        const bool last = (i == kPredSteps - 1);
        if (last) out.terms.l_fde = dist;
        if (with_grad) {
            const Vec2 unit = diff / std::max(dist, kDivGuard);
            Vec2 g = (w.ade / kPredSteps) * unit;
            if (last) g += w.fde * unit;
            add_center_grad(out.d_raw, i, g);
        }
    }

    // Containment of midpoints between consecutive centers.
    for (int i = 0; i < kPredSteps; ++i) {
        const Vec2 prev_pt = (i == 0) ? origin : steps[i - 1].center;
        const Vec2 r = 0.5 * (prev_pt - steps[i].center);
        Vec2 d_r = Vec2::Zero();
        Eigen::Matrix<double, 2, kGensPerStep> d_gens;
        d_gens.setZero();
        out.terms.l_prev +=
            containment_penalty(steps[i].gens, r, w.prev, with_grad, &d_r, &d_gens);
        if (with_grad) {
            if (i > 0) add_center_grad(out.d_raw, i - 1, 0.5 * d_r);
            add_center_grad(out.d_raw, i, -0.5 * d_r);
            for (int j = 0; j < kGensPerStep; ++j) add_gen_grad(out.d_raw, i, j, d_gens.col(j));
        }
    }
    for (int i = 0; i + 1 < kPredSteps; ++i) {
        const Vec2 r = 0.5 * (steps[i + 1].center - steps[i].center);
        Vec2 d_r = Vec2::Zero();
        Eigen::Matrix<double, 2, kGensPerStep> d_gens;
        d_gens.setZero();
        out.terms.l_nxt +=
            containment_penalty(steps[i].gens, r, w.nxt, with_grad, &d_r, &d_gens);
        if (with_grad) {
            add_center_grad(out.d_raw, i + 1, 0.5 * d_r);
            add_center_grad(out.d_raw, i, -0.5 * d_r);
            for (int j = 0; j < kGensPerStep; ++j) add_gen_grad(out.d_raw, i, j, d_gens.col(j));
        }
    }

    // Generator length regulation toward (d1, d2, d2, d2).
    for (int i = 0; i < kPredSteps; ++i) {
        for (int j = 0; j < kGensPerStep; ++j) {
            const Vec2 g = steps[i].gens.col(j);
            const double len = g.norm();
            const double target = (j == 0) ? d1 : d2;
            out.terms.l_g += std::abs(len - target);
            if (with_grad) {
                const Vec2 dg = w.size * sgn(len - target) * g / std::max(len, kDivGuard);
                add_gen_grad(out.d_raw, i, j, dg);
            }
        }
    }

    out.terms.total = weighted_total(out.terms, w);
    return out;
}

}  // namespace szn
