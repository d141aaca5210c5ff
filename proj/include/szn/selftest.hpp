#pragma once

#include <cstdint>
#include <string>

namespace szn {

struct CheckResult {
    bool pass = false;
    std::string detail;
};

/// Pairwise intersection vs. the vertex-enumeration + separating-axis
/// oracle on seeded random zonotope pairs (n_G in [1, 8]); disagreements are
/// allowed only when |overlap depth or gap| < 1e-9 m.
CheckResult check_geometry_oracle(int pairs = 10000, std::uint64_t seed = 2024);

/// Beta-sampled interior points all pass containment; support-direction
/// pushes (eps = 1e-3) all fail; zero exceptions.
CheckResult check_halfspace(int n_zonos = 1000, int pts_per_zono = 1000,
                            std::uint64_t seed = 7);

/// Closed-form walking step vs. RK4 integration of the pendulum ODE within
/// 1e-6 m and 1e-6 m/s.
CheckResult check_lip_rk4(int draws = 1000, std::uint64_t seed = 11);

/// Directional finite-difference probes of the full training loss
/// (KL + zonotope terms) through each network; relative error < 1e-4.
CheckResult check_network_gradients(int probes = 20, std::uint64_t seed = 5);

}  // namespace szn
