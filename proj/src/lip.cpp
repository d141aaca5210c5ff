#include "szn/lip.hpp"

#include <cmath>

namespace szn {

double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * M_PI);
    if (w <= -M_PI) w += 2.0 * M_PI;
    return w;
}

RobotState lip_step(const RobotState& x, const ControlInput& u, const LipParams& p) {
    const double wt = p.omega() * p.T;
    const double sh = std::sinh(wt);
    const double ch = std::cosh(wt);
    const double dx_loc = x.v_loc * sh / p.omega() + (1.0 - ch) * u.u_f;
    const double cos_v = p.sagittal_cos_coupling ? std::cos(x.theta) : 1.0;

    RobotState next;
    next.x = x.x + dx_loc * std::cos(x.theta);
    next.y = x.y + dx_loc * std::sin(x.theta);
    next.v_loc = ch * x.v_loc - p.omega() * sh * u.u_f * cos_v;
    next.theta = wrap_angle(x.theta + u.u_dtheta);
    return next;
}

std::vector<RobotState> lip_rollout(const RobotState& x0, std::span<const ControlInput> controls,
                                    const LipParams& p) {
    std::vector<RobotState> states;
    states.reserve(controls.size() + 1);
    states.push_back(x0);
    for (const ControlInput& u : controls) states.push_back(lip_step(states.back(), u, p));
    return states;
}

BoundsCheck check_bounds(const RobotState& x, const ControlInput& u, const KinematicBounds& kb) {
    BoundsCheck r;
    r.slack = {kb.u_f_min - u.u_f,          u.u_f - kb.u_f_max,
               kb.u_dtheta_min - u.u_dtheta, u.u_dtheta - kb.u_dtheta_max,
               kb.v_min - x.v_loc,           x.v_loc - kb.v_max};
    for (double s : r.slack) {
        if (s > 0.0) {
            r.ok = false;
            break;
        }
    }
    return r;
}

StepJacobians lip_step_jacobians(const RobotState& x, const ControlInput& u, const LipParams& p) {
    const double w = p.omega();
    const double wt = w * p.T;
    const double sh = std::sinh(wt);
    const double ch = std::cosh(wt);
    const double ct = std::cos(x.theta);
    const double st = std::sin(x.theta);
    const double dx_loc = x.v_loc * sh / w + (1.0 - ch) * u.u_f;
    const double cos_v = p.sagittal_cos_coupling ? ct : 1.0;
    const double dcos_v = p.sagittal_cos_coupling ? -st : 0.0;

    StepJacobians J;
    J.d_state.setIdentity();
    J.d_state(0, 2) = (sh / w) * ct;
    J.d_state(0, 3) = -dx_loc * st;
    J.d_state(1, 2) = (sh / w) * st;
    J.d_state(1, 3) = dx_loc * ct;
    J.d_state(2, 2) = ch;
    J.d_state(2, 3) = -w * sh * u.u_f * dcos_v;

    J.d_control.setZero();
    J.d_control(0, 0) = (1.0 - ch) * ct;
    J.d_control(1, 0) = (1.0 - ch) * st;
    J.d_control(2, 0) = -w * sh * cos_v;
    J.d_control(3, 1) = 1.0;
    return J;
}

}  // namespace szn
