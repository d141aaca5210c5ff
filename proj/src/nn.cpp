#include "szn/nn.hpp"

#include <cmath>
#include <string>

#include "szn/errors.hpp"

namespace szn {

Mlp make_mlp(const std::vector<int>& dims, std::mt19937_64& rng) {
    if (dims.size() < 2) throw DimensionMismatch("mlp needs at least one layer");
    Mlp m;
    m.dims = dims;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Mat w(fan_out, fan_in);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Vec::Zero(fan_out));
    }
    return m;
}

int param_count(const Mlp& m) {
    int n = 0;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        n += static_cast<int>(m.weights[l].size() + m.biases[l].size());
    }
    return n;
}

namespace {

void check_input(const Mlp& m, const Vec& in) {
    if (in.size() != m.input_dim()) {
        throw DimensionMismatch("mlp input has size " + std::to_string(in.size()) +
                                ", expected " + std::to_string(m.input_dim()));
    }
}

}  // namespace

Vec mlp_forward(const Mlp& m, const Vec& in) {
    check_input(m, in);
    Vec a = in;
    const int L = m.num_layers();
    for (int l = 0; l < L; ++l) {
        a = m.weights[l] * a + m.biases[l];
        if (l + 1 < L) a = a.cwiseMax(0.0);
    }
    return a;
}

Vec mlp_forward(const Mlp& m, const Vec& in, MlpTape& tape) {
    check_input(m, in);
    const int L = m.num_layers();
    tape.inputs.assign(static_cast<size_t>(L), Vec());
    tape.preacts.assign(static_cast<size_t>(L), Vec());
    Vec a = in;
    for (int l = 0; l < L; ++l) {
        tape.inputs[static_cast<size_t>(l)] = a;
        Vec z = m.weights[l] * a + m.biases[l];
        tape.preacts[static_cast<size_t>(l)] = z;
        a = (l + 1 < L) ? Vec(z.cwiseMax(0.0)) : z;
    }
    return a;
}

MlpGrads make_grads(const Mlp& m) {
    MlpGrads g;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        g.d_weights.push_back(Mat::Zero(m.weights[l].rows(), m.weights[l].cols()));
        g.d_biases.push_back(Vec::Zero(m.biases[l].size()));
    }
    return g;
}

void zero_grads(MlpGrads& g) {
    for (auto& w : g.d_weights) w.setZero();
    for (auto& b : g.d_biases) b.setZero();
}

void scale_grads(MlpGrads& g, double s) {
    for (auto& w : g.d_weights) w *= s;
    for (auto& b : g.d_biases) b *= s;
}

Vec mlp_backward(const Mlp& m, const MlpTape& tape, const Vec& d_out, MlpGrads& acc) {
    const int L = m.num_layers();
    if (d_out.size() != m.output_dim()) {
        throw DimensionMismatch("mlp output gradient has wrong size");
    }
    if (static_cast<int>(tape.inputs.size()) != L) {
        throw DimensionMismatch("tape does not match network depth");
    }
    Vec delta = d_out;
    for (int l = L - 1; l >= 0; --l) {
        if (l + 1 < L) {
            // ReLU mask from the cached pre-activation; dead units pass nothing.
            const Vec& z = tape.preacts[static_cast<size_t>(l)];
            for (Eigen::Index i = 0; i < delta.size(); ++i) {
                if (z(i) <= 0.0) delta(i) = 0.0;
            }
        }
        acc.d_weights[static_cast<size_t>(l)].noalias() +=
            delta * tape.inputs[static_cast<size_t>(l)].transpose();
        acc.d_biases[static_cast<size_t>(l)] += delta;
        delta = m.weights[static_cast<size_t>(l)].transpose() * delta;
    }
    return delta;
}

GaussianLatent split_latent(const Vec& raw) {
    if (raw.size() % 2 != 0) throw DimensionMismatch("latent head output must split in half");
    const Eigen::Index d = raw.size() / 2;
    GaussianLatent gl;
    gl.mu = raw.head(d);
    gl.log_var = raw.tail(d).cwiseMax(-kLogVarClamp).cwiseMin(kLogVarClamp);
    return gl;
}

Vec latent_backward(const Vec& raw, const Vec& d_mu, const Vec& d_log_var) {
    const Eigen::Index d = raw.size() / 2;
    if (d_mu.size() != d || d_log_var.size() != d) {
        throw DimensionMismatch("latent gradient sizes do not match head width");
    }
    Vec d_raw(raw.size());
    d_raw.head(d) = d_mu;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double lv = raw(d + i);
        d_raw(d + i) = (lv > -kLogVarClamp && lv < kLogVarClamp) ? d_log_var(i) : 0.0;
    }
    return d_raw;
}

Vec sample_latent(const GaussianLatent& gl, const Vec& noise) {
    if (noise.size() != gl.mu.size()) {
        throw DimensionMismatch("latent noise has wrong size");
    }
    return gl.mu.array() + (gl.log_var.array() / 2.0).exp() * noise.array();
}

KlResult kl_loss(const GaussianLatent& gl) {
    KlResult r;
    const Eigen::Index d = gl.mu.size();
    r.d_mu = gl.mu;
    r.d_log_var.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double ev = std::exp(gl.log_var(i));
        r.value += 0.5 * (ev + gl.mu(i) * gl.mu(i) - 1.0 - gl.log_var(i));
        r.d_log_var(i) = 0.5 * (ev - 1.0);
    }
    return r;
}

AdamState make_adam_state(const Mlp& m) {
    AdamState s;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        s.m_w.push_back(Mat::Zero(m.weights[l].rows(), m.weights[l].cols()));
        s.v_w.push_back(Mat::Zero(m.weights[l].rows(), m.weights[l].cols()));
        s.m_b.push_back(Vec::Zero(m.biases[l].size()));
        s.v_b.push_back(Vec::Zero(m.biases[l].size()));
    }
    return s;
}

void adam_update(Mlp& params, const MlpGrads& grads, AdamState& state, const AdamHyper& hyper) {
    if (grads.d_weights.size() != params.weights.size()) {
        throw DimensionMismatch("gradient blocks do not match parameter blocks");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    auto update = [&](auto& p, const auto& g, auto& mm, auto& vv) {
        mm = hyper.beta1 * mm + (1.0 - hyper.beta1) * g;
        vv = hyper.beta2 * vv.array() + (1.0 - hyper.beta2) * g.array().square();
        p.array() -= hyper.lr * (mm.array() / bc1) / ((vv.array() / bc2).sqrt() + hyper.eps);
    };
    for (size_t l = 0; l < params.weights.size(); ++l) {
        update(params.weights[l], grads.d_weights[l], state.m_w[l], state.v_w[l]);
        update(params.biases[l], grads.d_biases[l], state.m_b[l], state.v_b[l]);
    }
}

}  // namespace szn
