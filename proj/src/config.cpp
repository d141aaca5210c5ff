#include "szn/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "szn/errors.hpp"

namespace szn {

SznConfig load_config(const std::string& path, SznConfig base) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);

    SznConfig& c = base;
    const std::map<std::string, std::function<void(double)>> setters = {
        {"lip.T", [&](double v) { c.lip.T = v; }},
        {"lip.H", [&](double v) { c.lip.H = v; }},
        {"lip.g", [&](double v) { c.lip.g = v; }},
        {"lip.cos_coupling", [&](double v) { c.lip.sagittal_cos_coupling = v != 0.0; }},
        {"bounds.u_f_min", [&](double v) { c.bounds.u_f_min = v; }},
        {"bounds.u_f_max", [&](double v) { c.bounds.u_f_max = v; }},
        {"bounds.u_dtheta_deg",
         [&](double v) {
             c.bounds.u_dtheta_max = v * M_PI / 180.0;
             c.bounds.u_dtheta_min = -c.bounds.u_dtheta_max;
         }},
        {"bounds.v_min", [&](double v) { c.bounds.v_min = v; }},
        {"bounds.v_max", [&](double v) { c.bounds.v_max = v; }},
        {"mpc.horizon", [&](double v) { c.mpc.horizon = static_cast<int>(v); }},
        {"mpc.w1", [&](double v) { c.mpc.w1 = v; }},
        {"mpc.w2", [&](double v) { c.mpc.w2 = v; }},
        {"mpc.v_terminal", [&](double v) { c.mpc.v_terminal = v; }},
        {"mpc.lambda_reach", [&](double v) { c.mpc.lambda_reach = v; }},
        {"mpc.lambda_collide", [&](double v) { c.mpc.lambda_collide = v; }},
        {"mpc.delta_safe", [&](double v) { c.mpc.delta_safe = v; }},
        {"mpc.iterations", [&](double v) { c.mpc.iterations = static_cast<int>(v); }},
        {"mpc.step_size", [&](double v) { c.mpc.step_size = v; }},
        {"mpc.step_decay", [&](double v) { c.mpc.step_decay = v; }},
        {"mpc.smooth_max", [&](double v) { c.mpc.smooth_max = v != 0.0; }},
        {"mpc.lse_beta", [&](double v) { c.mpc.lse_beta = v; }},
        {"mpc.goal_input_clip", [&](double v) { c.mpc.goal_input_clip = v; }},
        {"sim.field", [&](double v) { c.sim.field = v; }},
        {"sim.goal_x", [&](double v) { c.sim.goal.x() = v; }},
        {"sim.goal_y", [&](double v) { c.sim.goal.y() = v; }},
        {"sim.sensor_radius", [&](double v) { c.sim.sensor_radius = v; }},
        {"sim.min_distance", [&](double v) { c.sim.min_distance = v; }},
        {"sim.step_cap", [&](double v) { c.sim.step_cap = static_cast<int>(v); }},
        {"sim.goal_tol", [&](double v) { c.sim.goal_tol = v; }},
        {"train.epochs", [&](double v) { c.train.epochs = static_cast<int>(v); }},
        {"train.batch_size", [&](double v) { c.train.batch_size = static_cast<int>(v); }},
        {"train.lr", [&](double v) { c.train.adam.lr = v; }},
        {"train.d1", [&](double v) { c.train.d1 = v; }},
        {"train.d2", [&](double v) { c.train.d2 = v; }},
        {"train.w_ade", [&](double v) { c.train.weights.ade = v; }},
        {"train.w_fde", [&](double v) { c.train.weights.fde = v; }},
        {"train.w_prev", [&](double v) { c.train.weights.prev = v; }},
        {"train.w_nxt", [&](double v) { c.train.weights.nxt = v; }},
        {"train.w_g", [&](double v) { c.train.weights.size = v; }},
        {"train.w_kl", [&](double v) { c.train.weights.kl = v; }},
    };

    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = true;
            for (char ch : line) {
                if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
            }
            if (blank) continue;
            throw IoError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw IoError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        try {
            it->second(std::stod(value));
        } catch (const std::exception&) {
            throw IoError("config line " + std::to_string(line_no) + ": bad value '" + value + "'");
        }
    }
    return c;
}

}  // namespace szn
