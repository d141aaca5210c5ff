#pragma once

#include <span>
#include <string>
#include <vector>

#include "szn/lip.hpp"
#include "szn/networks.hpp"

namespace szn {

struct MpcConfig {
    int horizon = 4;  // N walking steps
    double w1 = 3.0;  // terminal position/velocity weight
    double w2 = 1.0;  // terminal heading weight
    double v_terminal = 0.0;        // m/s
    double lambda_reach = 100.0;    // reachability penalty weight
    double lambda_collide = 100.0;  // collision penalty weight
    double lambda_bounds = 100.0;   // state-box (v_loc) penalty weight
    double delta_safe = 0.1;        // m, margin realizing the strict separation
    int iterations = 50;            // gradient iterations per solve
    double step_size = 0.05;        // Adam step on the controls
    double step_decay = 1.0;        // per-iteration multiplier
    double polish_fraction = 0.4;   // extra fine-step iterations, as a fraction
    double polish_scale = 0.1;      // step-size multiplier for the polish phase
    double feas_tol = 5e-3;         // m; violations below this count as feasible
    double bounds_tol = 0.02;       // m/s slack on the velocity box
    bool escalate_on_infeasible = true;  // one 10x penalty escalation
    /// 0 = brake whenever the best iterate is collision-infeasible anywhere
    /// on the horizon; 1 = brake only when its first step is (the default:
    /// far-horizon conflicts are re-planned next step); 2 = never brake.
    int brake_mode = 1;
    bool smooth_max = false;             // log-sum-exp row aggregation
    double lse_beta = 50.0;
    double goal_input_clip = 3.5;  // m, cap on the goal vector fed to the network
    std::string trace_path;        // per-iterate CSV when non-empty
};

/// Pedestrian observed inside the sensory radius; past is relative to the
/// ego-agent's current position.
struct ObservedPedestrian {
    Traj8 past_ego;
};

struct EnvState {
    std::vector<ObservedPedestrian> pedestrians;
    Vec2 goal = Vec2::Zero();  // world frame
    /// Predicted pedestrian sequences (world frame) at the returned iterate;
    /// filled by solve().
    std::vector<ZonoSeq> ped_zonotopes;
};

struct MpcSolution {
    std::vector<ControlInput> controls;    // N
    std::vector<RobotState> states;        // N + 1, exactly rollout(x0, controls)
    std::vector<Zonotope2> ego_zonotopes;  // N, world frame, at the returned controls
    struct Diagnostics {
        double initial_objective = 0.0;
        double final_objective = 0.0;
        double terminal_cost = 0.0;
        double max_reach_violation = 0.0;
        double max_collide_violation = 0.0;  // margin shortfall, m
        double max_bounds_violation = 0.0;   // velocity-box excess, m/s
        int iterations = 0;
        int best_iteration = 0;
        double solve_seconds = 0.0;
        bool feasible = false;
        bool fallback_used = false;
        bool escalated = false;
    } diag;
};

/// W1-weighted squared distance of (x, y, v) to (goal, v_terminal) plus
/// W2-weighted squared wrapped heading error toward the goal bearing seen
/// from `current_pos`.
struct TerminalCost {
    double value = 0.0;
    Eigen::Vector4d d_state;  // (x, y, v, theta)
};
TerminalCost terminal_cost(const RobotState& x_n, const Vec2& goal, const Vec2& current_pos,
                           const MpcConfig& cfg);

/// Largest half-space margin of `point` against zonotope (center, gens)
/// using the smoothed per-generator conversion; > 0 means outside. Gradients
/// flow to the point, the center, and every generator column.
struct HalfspaceMargin {
    double value = 0.0;
    Vec2 d_point = Vec2::Zero();
    Vec2 d_center = Vec2::Zero();
    Mat2X d_gens;
};
HalfspaceMargin halfspace_margin(const Vec2& point, const Vec2& center, const Mat2X& gens,
                                 bool smooth_max = false, double lse_beta = 50.0);

/// ReLU(max-row margin): zero iff the point sits inside the zonotope.
struct ReachPenalty {
    double value = 0.0;
    Vec2 d_point = Vec2::Zero();
    Vec2 d_center = Vec2::Zero();
    Mat2X d_gens;
};
ReachPenalty reach_penalty(const Vec2& p_next, const Zonotope2& ego_zono,
                           bool smooth_max = false, double lse_beta = 50.0);

/// ReLU(delta_safe - margin of the pedestrian center against the Minkowski
/// zonotope Z(c_ego, [G_ego G_ped])); zero iff separation holds with margin.
struct CollidePenalty {
    double value = 0.0;
    Vec2 d_ped_center = Vec2::Zero();
    Vec2 d_ego_center = Vec2::Zero();
    Mat2X d_ego_gens;
    Mat2X d_ped_gens;
};
CollidePenalty collide_penalty(const Vec2& ped_center, const Zonotope2& ego_zono,
                               const Zonotope2& ped_zono, double delta_safe,
                               bool smooth_max = false, double lse_beta = 50.0);

/// One pass of the planning objective at fixed controls: networks
/// conditioned on the candidate first-step displacement, penalties over the
/// horizon, and the full gradient back onto the controls (through the
/// rollout Jacobians and both networks).
struct MpcEval {
    double objective = 0.0;
    double terminal_val = 0.0;
    double reach_viol = 0.0;    // worst margin excess, m
    double collide_viol = 0.0;  // worst margin shortfall, m
    double collide_viol_first = 0.0;  // shortfall at the imminent step, m
    double bounds_viol = 0.0;   // worst velocity-box excess, m/s
    std::vector<RobotState> states;
    std::vector<Zonotope2> ego_zonos;  // world frame, first N steps
    std::vector<ZonoSeq> ped_zonos;    // world frame
    Eigen::VectorXd grad;              // 2N, (u_f, u_dtheta) per step

    bool feasible(double tol, double vel_tol) const {
        return reach_viol <= tol && collide_viol <= tol && bounds_viol <= vel_tol;
    }
};
MpcEval evaluate_objective(const RobotState& x0, const EnvState& env, const PpnModel& ppn,
                           const EsnModel& esn, const MpcConfig& cfg, const LipParams& lip,
                           const KinematicBounds& kb, const std::vector<ControlInput>& controls,
                           double lambda_reach, double lambda_collide);

/**
 * Receding-horizon footstep solve. Each iterate re-runs both networks off
 * the candidate first-step displacement, assembles the penalty objective,
 * and backpropagates through the rollout Jacobians and both networks onto
 * the N controls (Adam steps, box projection). Returns the best feasible
 * iterate, else the least-violating one; if still infeasible after the
 * penalty escalation the returned controls brake to rest and the
 * `fallback_used` flag is set. env.ped_zonotopes is filled at the returned
 * controls.
 */
MpcSolution solve(const RobotState& x0, EnvState& env, const PpnModel& ppn, const EsnModel& esn,
                  const MpcConfig& cfg, const LipParams& lip, const KinematicBounds& kb,
                  std::span<const ControlInput> warm_start = {});

}  // namespace szn
