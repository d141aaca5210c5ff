#include "szn/mpc.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "szn/errors.hpp"

namespace szn {

namespace {

constexpr double kNormGuard = 1e-12;

double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

struct RowGrad {
    Vec2 d_point;
    Vec2 d_center;
    Mat2X d_gens;
};

// Margin and gradient of one half-space row (generator j, sign s).
double row_margin(const Vec2& p, const Vec2& c, const Mat2X& gens, int j, double s,
                  RowGrad* grad) {
    const Vec2 g = gens.col(j);
    const double len = std::sqrt(g.squaredNorm() + kNormGuard);
    const Vec2 n(-g.y() / len, g.x() / len);
    const double u = n.dot(p - c);
    double w = 0.0;
    for (Eigen::Index k = 0; k < gens.cols(); ++k) w += std::abs(n.dot(gens.col(k)));
    const double val = s * u - w;
    if (grad) {
        grad->d_point = s * n;
        grad->d_center = -s * n;
        grad->d_gens = Mat2X::Zero(2, gens.cols());
        Vec2 d_n = s * (p - c);
        for (Eigen::Index k = 0; k < gens.cols(); ++k) {
            const double sk = sgn(n.dot(gens.col(k)));
            d_n -= sk * gens.col(k);
            grad->d_gens.col(k) -= sk * n;
        }
        const Vec2 rt_dn(d_n.y(), -d_n.x());  // R^T d_n with R = [[0,-1],[1,0]]
        grad->d_gens.col(j) += rt_dn / len - g * (n.dot(d_n)) / (len * len);
    }
    return val;
}

}  // namespace

HalfspaceMargin halfspace_margin(const Vec2& point, const Vec2& center, const Mat2X& gens,
                                 bool smooth_max, double lse_beta) {
    const Eigen::Index m = gens.cols();
    HalfspaceMargin out;
    out.d_gens = Mat2X::Zero(2, m);
    if (m == 0) throw DegenerateGenerator("margin of a zonotope with no generators");

    if (!smooth_max) {
        double best = -std::numeric_limits<double>::infinity();
        int best_j = 0;
        double best_s = 1.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            for (double s : {1.0, -1.0}) {
                const double val = row_margin(point, center, gens, static_cast<int>(j), s, nullptr);
                if (val > best) {
                    best = val;
                    best_j = static_cast<int>(j);
                    best_s = s;
                }
            }
        }
        RowGrad rg;
        row_margin(point, center, gens, best_j, best_s, &rg);
        out.value = best;
        out.d_point = rg.d_point;
        out.d_center = rg.d_center;
        out.d_gens = rg.d_gens;
        return out;
    }

    // Log-sum-exp over the 2m rows, softmax-weighted gradients.
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(2 * m));
    double vmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
        for (double s : {1.0, -1.0}) {
            const double v = row_margin(point, center, gens, static_cast<int>(j), s, nullptr);
            vals.push_back(v);
            vmax = std::max(vmax, v);
        }
    }
    double denom = 0.0;
    for (double v : vals) denom += std::exp(lse_beta * (v - vmax));
    out.value = vmax + std::log(denom) / lse_beta;
    size_t idx = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
        for (double s : {1.0, -1.0}) {
            const double wgt = std::exp(lse_beta * (vals[idx] - vmax)) / denom;
            ++idx;
            if (wgt < 1e-12) continue;
            RowGrad rg;
            row_margin(point, center, gens, static_cast<int>(j), s, &rg);
            out.d_point += wgt * rg.d_point;
            out.d_center += wgt * rg.d_center;
            out.d_gens += wgt * rg.d_gens;
        }
    }
    return out;
}

ReachPenalty reach_penalty(const Vec2& p_next, const Zonotope2& ego_zono, bool smooth_max,
                           double lse_beta) {
    const HalfspaceMargin hm =
        halfspace_margin(p_next, ego_zono.center, ego_zono.generators, smooth_max, lse_beta);
    ReachPenalty out;
    out.d_gens = Mat2X::Zero(2, ego_zono.generators.cols());
    if (hm.value > 0.0) {
        out.value = hm.value;
        out.d_point = hm.d_point;
        out.d_center = hm.d_center;
        out.d_gens = hm.d_gens;
    }
    return out;
}

CollidePenalty collide_penalty(const Vec2& ped_center, const Zonotope2& ego_zono,
                               const Zonotope2& ped_zono, double delta_safe, bool smooth_max,
                               double lse_beta) {
    const Eigen::Index ne = ego_zono.generators.cols();
    const Eigen::Index np = ped_zono.generators.cols();
    Mat2X mink(2, ne + np);
    mink << ego_zono.generators, ped_zono.generators;
    const HalfspaceMargin hm =
        halfspace_margin(ped_center, ego_zono.center, mink, smooth_max, lse_beta);
    CollidePenalty out;
    out.d_ego_gens = Mat2X::Zero(2, ne);
    out.d_ped_gens = Mat2X::Zero(2, np);
    const double shortfall = delta_safe - hm.value;
    if (shortfall > 0.0) {
        out.value = shortfall;
        out.d_ped_center = -hm.d_point;
        out.d_ego_center = -hm.d_center;
        out.d_ego_gens = -hm.d_gens.leftCols(ne);
        out.d_ped_gens = -hm.d_gens.rightCols(np);
    }
    return out;
}

TerminalCost terminal_cost(const RobotState& x_n, const Vec2& goal, const Vec2& current_pos,
                           const MpcConfig& cfg) {
    const double theta_goal = std::atan2(goal.y() - current_pos.y(), goal.x() - current_pos.x());
    const double ex = x_n.x - goal.x();
    const double ey = x_n.y - goal.y();
    const double ev = x_n.v_loc - cfg.v_terminal;
    const double et = wrap_angle(x_n.theta - theta_goal);
    TerminalCost tc;
    tc.value = cfg.w1 * (ex * ex + ey * ey + ev * ev) + cfg.w2 * et * et;
    tc.d_state = Eigen::Vector4d(2.0 * cfg.w1 * ex, 2.0 * cfg.w1 * ey, 2.0 * cfg.w1 * ev,
                                 2.0 * cfg.w2 * et);
    return tc;
}

namespace {

void add_raw_center(Vec& d_raw, int step, const Vec2& g) {
    d_raw(step * kRawPerStep) += g.x();
    d_raw(step * kRawPerStep + 1) += g.y();
}

void add_raw_gens(Vec& d_raw, int step, const Mat2X& g, int col_offset = 0) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        d_raw(step * kRawPerStep + 2 + 2 * (col_offset + static_cast<int>(j))) += g(0, j);
        d_raw(step * kRawPerStep + 2 + 2 * (col_offset + static_cast<int>(j)) + 1) += g(1, j);
    }
}

}  // namespace

MpcEval evaluate_objective(const RobotState& x0, const EnvState& env, const PpnModel& ppn,
                           const EsnModel& esn, const MpcConfig& cfg, const LipParams& lip,
                           const KinematicBounds& kb, const std::vector<ControlInput>& u,
                           double lam_reach, double lam_collide) {
    const int n = cfg.horizon;
    const Vec2 ego_pos(x0.x, x0.y);
    const Vec zeros16 = Vec::Zero(kLatentDim);

    Vec2 goal_input = env.goal - ego_pos;
    if (goal_input.norm() > cfg.goal_input_clip) {
        goal_input *= cfg.goal_input_clip / goal_input.norm();
    }

    MpcEval ev;
    ev.states = lip_rollout(x0, u, lip);
    const Vec2 dp0(ev.states[1].x - x0.x, ev.states[1].y - x0.y);

    // Pedestrian predictions, then the ego prediction conditioned on them.
    const size_t n_peds = env.pedestrians.size();
    std::vector<PpnTape> ped_tapes(n_peds);
    std::vector<PpnOutput> ped_out(n_peds);
    for (size_t k = 0; k < n_peds; ++k) {
        ped_out[k] = ppn_forward(ppn, env.pedestrians[k].past_ego, dp0, std::nullopt,
                                 RunMode::kInfer, zeros16, &ped_tapes[k]);
    }
    const Vec fut_feat = ped_future_feature(ped_out);
    EsnTape esn_tape;
    const EsnOutput ego_out = esn_forward(esn, fut_feat, goal_input, dp0, std::nullopt,
                                          RunMode::kInfer, zeros16, &esn_tape);

    ev.ego_zonos.reserve(static_cast<size_t>(n));
    for (int q = 0; q < n; ++q) {
        Zonotope2 z = ego_out.zonotopes[static_cast<size_t>(q)];
        z.center += ego_pos;
        ev.ego_zonos.push_back(z);
    }
    ev.ped_zonos.resize(n_peds);
    for (size_t k = 0; k < n_peds; ++k) {
        ev.ped_zonos[k] = ped_out[k].zonotopes;
        for (Zonotope2& z : ev.ped_zonos[k]) z.center += ego_pos;
    }

    std::vector<Eigen::Vector4d> d_states(static_cast<size_t>(n) + 1,
                                          Eigen::Vector4d::Zero());
    Vec d_esn_raw = Vec::Zero(kRawWidth);
    std::vector<Vec> d_ppn_raw(n_peds, Vec::Zero(kRawWidth));

    const TerminalCost tc =
        terminal_cost(ev.states[static_cast<size_t>(n)], env.goal, ego_pos, cfg);
    ev.terminal_val = tc.value;
    ev.objective = tc.value;
    d_states[static_cast<size_t>(n)] += tc.d_state;

    for (int q = 0; q < n; ++q) {
        const RobotState& sq = ev.states[static_cast<size_t>(q) + 1];
        const Vec2 p_next(sq.x, sq.y);
        const Zonotope2& ego_z = ev.ego_zonos[static_cast<size_t>(q)];

        const double v_over = sq.v_loc - kb.v_max;
        const double v_under = kb.v_min - sq.v_loc;
        if (v_over > 0.0) {
            ev.bounds_viol = std::max(ev.bounds_viol, v_over);
            ev.objective += cfg.lambda_bounds * v_over;
            d_states[static_cast<size_t>(q) + 1](2) += cfg.lambda_bounds;
        }
        if (v_under > 0.0) {
            ev.bounds_viol = std::max(ev.bounds_viol, v_under);
            ev.objective += cfg.lambda_bounds * v_under;
            d_states[static_cast<size_t>(q) + 1](2) -= cfg.lambda_bounds;
        }

        const ReachPenalty rp = reach_penalty(p_next, ego_z, cfg.smooth_max, cfg.lse_beta);
        ev.reach_viol = std::max(ev.reach_viol, rp.value);
        if (rp.value > 0.0) {
            ev.objective += lam_reach * rp.value;
            d_states[static_cast<size_t>(q) + 1].head<2>() += lam_reach * rp.d_point;
            add_raw_center(d_esn_raw, q, lam_reach * rp.d_center);
            add_raw_gens(d_esn_raw, q, lam_reach * rp.d_gens);
        }

        for (size_t k = 0; k < n_peds; ++k) {
            const Zonotope2& ped_z = ev.ped_zonos[k][static_cast<size_t>(q)];
            const CollidePenalty cp = collide_penalty(ped_z.center, ego_z, ped_z,
                                                      cfg.delta_safe, cfg.smooth_max,
                                                      cfg.lse_beta);
            ev.collide_viol = std::max(ev.collide_viol, cp.value);
            if (cp.value > 0.0) {
                ev.objective += lam_collide * cp.value;
                add_raw_center(d_esn_raw, q, lam_collide * cp.d_ego_center);
                add_raw_gens(d_esn_raw, q, lam_collide * cp.d_ego_gens);
                add_raw_center(d_ppn_raw[k], q, lam_collide * cp.d_ped_center);
                add_raw_gens(d_ppn_raw[k], q, lam_collide * cp.d_ped_gens, 0);
            }
        }
    }

    // Through the networks onto the first-step displacement.
    EsnGrads esn_sink = make_grads(esn);
    const EsnInputGrads esn_in = esn_backward(esn, esn_tape, d_esn_raw, 0.0, esn_sink);
    Vec2 d_dp0 = esn_in.d_ego_next;
    PpnGrads ppn_sink = make_grads(ppn);
    for (size_t k = 0; k < n_peds; ++k) {
        Vec d_raw_k = d_ppn_raw[k];
        for (int i = 0; i < kPredSteps; ++i) {
            d_raw_k(i * kRawPerStep) += esn_in.d_ped_future_feat(2 * i);
            d_raw_k(i * kRawPerStep + 1) += esn_in.d_ped_future_feat(2 * i + 1);
        }
        const Vec2 d_ep(esn_in.d_ped_future_feat(14), esn_in.d_ped_future_feat(15));
        const PpnInputGrads g = ppn_backward(ppn, ped_tapes[k], d_raw_k, d_ep, 0.0, ppn_sink);
        d_dp0 += g.d_ego_next;
    }
    d_states[1].head<2>() += d_dp0;  // dp0 = p1 - p0 with p0 fixed

    // Adjoint through the rollout.
    ev.grad = Eigen::VectorXd::Zero(2 * n);
    Eigen::Vector4d lam = d_states[static_cast<size_t>(n)];
    for (int q = n - 1; q >= 0; --q) {
        const StepJacobians J =
            lip_step_jacobians(ev.states[static_cast<size_t>(q)], u[static_cast<size_t>(q)], lip);
        const Eigen::Vector2d gu = J.d_control.transpose() * lam;
        ev.grad(2 * q) = gu(0);
        ev.grad(2 * q + 1) = gu(1);
        lam = J.d_state.transpose() * lam;
        if (q >= 1) lam += d_states[static_cast<size_t>(q)];
    }
    return ev;
}

MpcSolution solve(const RobotState& x0, EnvState& env, const PpnModel& ppn, const EsnModel& esn,
                  const MpcConfig& cfg, const LipParams& lip, const KinematicBounds& kb,
                  std::span<const ControlInput> warm_start) {
    const auto t_start = std::chrono::steady_clock::now();
    const int n = cfg.horizon;

    auto clamp_controls = [&](std::vector<ControlInput>& u) {
        for (ControlInput& c : u) {
            c.u_f = std::clamp(c.u_f, kb.u_f_min, kb.u_f_max);
            c.u_dtheta = std::clamp(c.u_dtheta, kb.u_dtheta_min, kb.u_dtheta_max);
        }
    };
    auto evaluate = [&](const std::vector<ControlInput>& u, double lam_reach,
                        double lam_collide) -> MpcEval {
        return evaluate_objective(x0, env, ppn, esn, cfg, lip, kb, u, lam_reach, lam_collide);
    };

    std::vector<ControlInput> u(static_cast<size_t>(n));
    for (int q = 0; q < n && static_cast<size_t>(q) < warm_start.size(); ++q) {
        u[static_cast<size_t>(q)] = warm_start[static_cast<size_t>(q)];
    }
    clamp_controls(u);

    std::ofstream trace;
    if (!cfg.trace_path.empty()) {
        trace.open(cfg.trace_path);
        trace << "iterate,objective,reach_violation,collide_violation,feasible\n";
    }

    struct Best {
        std::vector<ControlInput> u;
        double objective = std::numeric_limits<double>::infinity();
        double violation = std::numeric_limits<double>::infinity();
        double collide_viol = std::numeric_limits<double>::infinity();
        double collide_first = std::numeric_limits<double>::infinity();
        bool feasible = false;
        int iterate = 0;
    } best;

    double lam_reach = cfg.lambda_reach;
    double lam_collide = cfg.lambda_collide;
    double initial_objective = 0.0;
    int total_iters = 0;
    bool escalated = false;

    // Coarse segment travels, fine segment settles onto the constraint set
    // from the best point found so far.
    auto descend = [&](int iters, double lr0) {
        Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(2 * n);
        Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(2 * n);
        double lr = lr0;
        for (int it = 0; it <= iters; ++it) {
            const MpcEval ev = evaluate(u, lam_reach, lam_collide);
            if (total_iters == 0) initial_objective = ev.objective;
            const double viol =
                std::max({ev.reach_viol, ev.collide_viol,
                          std::max(0.0, ev.bounds_viol - cfg.bounds_tol)});
            const bool feas = ev.feasible(cfg.feas_tol, cfg.bounds_tol);
            const bool better = feas ? (!best.feasible || ev.objective < best.objective)
                                     : (!best.feasible && viol < best.violation);
            if (better) {
                best.u = u;
                best.objective = ev.objective;
                best.violation = viol;
                best.collide_viol = ev.collide_viol;
                best.collide_first = ev.collide_viol_first;
                best.feasible = feas;
                best.iterate = total_iters;
            }
            if (trace.is_open()) {
                trace << total_iters << ',' << ev.objective << ',' << ev.reach_viol << ','
                      << ev.collide_viol << ',' << (feas ? 1 : 0) << '\n';
            }
            ++total_iters;
            if (it == iters) break;

            const int t = it + 1;
            const double bc1 = 1.0 - std::pow(0.9, t);
            const double bc2 = 1.0 - std::pow(0.999, t);
            for (int i = 0; i < 2 * n; ++i) {
                adam_m(i) = 0.9 * adam_m(i) + 0.1 * ev.grad(i);
                adam_v(i) = 0.999 * adam_v(i) + 0.001 * ev.grad(i) * ev.grad(i);
                const double step =
                    lr * (adam_m(i) / bc1) / (std::sqrt(adam_v(i) / bc2) + 1e-8);
                if (i % 2 == 0) {
                    u[static_cast<size_t>(i / 2)].u_f -= step;
                } else {
                    u[static_cast<size_t>(i / 2)].u_dtheta -= step;
                }
            }
            clamp_controls(u);
            lr *= cfg.step_decay;
        }
    };

    const int polish_iters = static_cast<int>(cfg.polish_fraction * cfg.iterations);
    for (int phase = 0; phase < 2; ++phase) {
        descend(cfg.iterations, cfg.step_size);
        if (polish_iters > 0) {
            u = best.u;
            descend(polish_iters, cfg.step_size * cfg.polish_scale);
        }
        if (best.feasible || !cfg.escalate_on_infeasible || phase == 1) break;
        lam_reach *= 10.0;
        lam_collide *= 10.0;
        escalated = true;
        u = best.u;  // continue from the least-violating point
    }

    // Safety gates on the collision margin; the reach corridor is best-effort
    // (a cold start cannot match the walking-pace chain, so the
    // least-violating iterate is still the one to apply).
    bool collision_ok = true;
    if (cfg.brake_mode == 0) {
        collision_ok = best.collide_viol <= cfg.feas_tol;
    } else if (cfg.brake_mode == 1) {
        collision_ok = best.collide_first <= cfg.feas_tol;
    }

    MpcSolution sol;
    sol.diag.escalated = escalated;
    sol.diag.iterations = total_iters;
    sol.diag.best_iteration = best.iterate;
    sol.diag.initial_objective = initial_objective;
    sol.diag.feasible = best.feasible;

    if (collision_ok) {
        sol.controls = best.u;
    } else {
        // Brake to rest: pick u_f that drives v' to zero, zero heading change.
        sol.diag.fallback_used = true;
        const double w = lip.omega();
        const double sh = std::sinh(w * lip.T);
        const double ch = std::cosh(w * lip.T);
        RobotState s = x0;
        sol.controls.assign(static_cast<size_t>(n), ControlInput{});
        for (int q = 0; q < n; ++q) {
            const double cos_v = lip.sagittal_cos_coupling ? std::cos(s.theta) : 1.0;
            double uf = 0.0;
            if (std::abs(cos_v) > 1e-3) uf = ch * s.v_loc / (w * sh * cos_v);
            ControlInput c{std::clamp(uf, kb.u_f_min, kb.u_f_max), 0.0};
            sol.controls[static_cast<size_t>(q)] = c;
            s = lip_step(s, c, lip);
        }
    }

    const MpcEval fin = evaluate(sol.controls, cfg.lambda_reach, cfg.lambda_collide);
    sol.states = fin.states;
    sol.ego_zonotopes = fin.ego_zonos;
    env.ped_zonotopes = fin.ped_zonos;
    sol.diag.final_objective = fin.objective;
    sol.diag.terminal_cost = fin.terminal_val;
    sol.diag.max_reach_violation = fin.reach_viol;
    sol.diag.max_collide_violation = fin.collide_viol;
    sol.diag.max_bounds_violation = fin.bounds_viol;
    sol.diag.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return sol;
}

}  // namespace szn
