#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

namespace szn {

/// Step-to-step state of the walking reduced-order model. Heading is kept
/// wrapped to (-pi, pi].
struct RobotState {
    double x = 0.0;      // m, global
    double y = 0.0;      // m, global
    double v_loc = 0.0;  // m/s, local sagittal velocity at contact switch
    double theta = 0.0;  // rad, heading
};

struct ControlInput {
    double u_f = 0.0;       // m, local sagittal foot position relative to CoM
    double u_dtheta = 0.0;  // rad, heading change over the step
};

/// Pendulum constants. One walking step lasts T; omega = sqrt(g/H).
/// `sagittal_cos_coupling` keeps the cos(theta) factor on the foot term of
/// the velocity update; switching it off gives the heading-decoupled variant
/// for sensitivity runs.
struct LipParams {
    double T = 0.4;   // s
    double H = 1.0;   // m
    double g = 9.81;  // m/s^2
    bool sagittal_cos_coupling = true;

    double omega() const { return std::sqrt(g / H); }
};

struct KinematicBounds {
    double u_f_min = -0.1;                       // m
    double u_f_max = 0.4;                        // m
    double u_dtheta_min = -15.0 * M_PI / 180.0;  // rad
    double u_dtheta_max = 15.0 * M_PI / 180.0;   // rad
    double v_min = 0.0;                          // m/s
    double v_max = 1.0;                          // m/s
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// One walking step of the closed-form pendulum dynamics.
RobotState lip_step(const RobotState& x, const ControlInput& u, const LipParams& p);

/// states[0] = x0, states[k+1] = lip_step(states[k], controls[k]).
std::vector<RobotState> lip_rollout(const RobotState& x0, std::span<const ControlInput> controls,
                                    const LipParams& p);

/// Signed slack per bound, > 0 when violated. Order: u_f low/high,
/// u_dtheta low/high, v_loc low/high.
struct BoundsCheck {
    bool ok = true;
    std::array<double, 6> slack{};
};
BoundsCheck check_bounds(const RobotState& x, const ControlInput& u, const KinematicBounds& kb);

/// Analytic Jacobians of one step, state order (x, y, v_loc, theta).
struct StepJacobians {
    Eigen::Matrix4d d_state;               // dx'/dx
    Eigen::Matrix<double, 4, 2> d_control; // dx'/du, control order (u_f, u_dtheta)
};
StepJacobians lip_step_jacobians(const RobotState& x, const ControlInput& u, const LipParams& p);

}  // namespace szn
