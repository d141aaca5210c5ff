#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

namespace szn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/**
 * Feed-forward stack: dims[0] inputs, ReLU after every layer except the last
 * (linear output). weights[l] is dims[l+1] x dims[l]; biases[l] has length
 * dims[l+1]. All math is in 64-bit floats so gradient checks stay tight.
 */
struct Mlp {
    std::vector<int> dims;
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    int num_layers() const { return static_cast<int>(weights.size()); }
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
Mlp make_mlp(const std::vector<int>& dims, std::mt19937_64& rng);

int param_count(const Mlp& m);

/// Activations cached by a forward pass, enough for exact backprop.
struct MlpTape {
    std::vector<Vec> inputs;   // inputs[l] feeds layer l (inputs[0] = network input)
    std::vector<Vec> preacts;  // preacts[l] = W_l * inputs[l] + b_l
};

/// Inference path (no tape).
Vec mlp_forward(const Mlp& m, const Vec& in);

/// Training path; tape is overwritten.
Vec mlp_forward(const Mlp& m, const Vec& in, MlpTape& tape);

struct MlpGrads {
    std::vector<Mat> d_weights;
    std::vector<Vec> d_biases;
};

MlpGrads make_grads(const Mlp& m);
void zero_grads(MlpGrads& g);
void scale_grads(MlpGrads& g, double s);

/// Accumulates parameter gradients (+=) and returns the input gradient.
Vec mlp_backward(const Mlp& m, const MlpTape& tape, const Vec& d_out, MlpGrads& acc);

/// Latent heads emit (mu, log_var); log_var is clamped to +-kLogVarClamp by
/// split_latent before use.
inline constexpr double kLogVarClamp = 10.0;

struct GaussianLatent {
    Vec mu;
    Vec log_var;
};

/// Splits a 2d-wide head output into mu (first half) and clamped log_var.
GaussianLatent split_latent(const Vec& raw);

/// Routes (d_mu, d_log_var) back to the raw head output, zeroing the clamped
/// coordinates.
Vec latent_backward(const Vec& raw, const Vec& d_mu, const Vec& d_log_var);

/// Reparameterized draw z = mu + exp(log_var/2) .* noise.
Vec sample_latent(const GaussianLatent& gl, const Vec& noise);

/// KL(N(mu, sigma) || N(0, I)) with analytic gradient.
struct KlResult {
    double value = 0.0;
    Vec d_mu;
    Vec d_log_var;
};
KlResult kl_loss(const GaussianLatent& gl);

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Mat> m_w, v_w;
    std::vector<Vec> m_b, v_b;
    long step = 0;
};

AdamState make_adam_state(const Mlp& m);

/// First/second-moment update with bias correction; deterministic.
void adam_update(Mlp& params, const MlpGrads& grads, AdamState& state, const AdamHyper& hyper);

}  // namespace szn
