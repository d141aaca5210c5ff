#include "szn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "szn/errors.hpp"

namespace szn {

namespace {

constexpr const char* kMagic = "SZN_CKPT";
constexpr int kVersion = 1;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_net(std::ostream& os, const std::string& name, const Mlp& net) {
    os << "net " << name;
    for (int d : net.dims) os << ' ' << d;
    os << '\n';
    for (int l = 0; l < net.num_layers(); ++l) {
        const Mat& w = net.weights[static_cast<size_t>(l)];
        os << "W " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                if (c) os << ' ';
                os << fmt(w(r, c));
            }
            os << '\n';
        }
        const Vec& b = net.biases[static_cast<size_t>(l)];
        os << "b " << l << ' ' << b.size() << '\n';
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            if (i) os << ' ';
            os << fmt(b(i));
        }
        os << '\n';
    }
}

void read_net(std::istream& is, const std::string& expect_name, Mlp& net) {
    std::string tag, name;
    if (!(is >> tag >> name) || tag != "net" || name != expect_name) {
        throw IoError("checkpoint: expected sub-network '" + expect_name + "'");
    }
    for (size_t i = 0; i < net.dims.size(); ++i) {
        int d = 0;
        if (!(is >> d) || d != net.dims[i]) {
            throw IoError("checkpoint: layer dims of '" + expect_name +
                          "' do not match the expected architecture");
        }
    }
    for (int l = 0; l < net.num_layers(); ++l) {
        int idx = 0;
        Eigen::Index rows = 0, cols = 0;
        if (!(is >> tag >> idx >> rows >> cols) || tag != "W" || idx != l ||
            rows != net.weights[static_cast<size_t>(l)].rows() ||
            cols != net.weights[static_cast<size_t>(l)].cols()) {
            throw IoError("checkpoint: bad weight block in '" + expect_name + "'");
        }
        Mat& w = net.weights[static_cast<size_t>(l)];
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (!(is >> w(r, c))) throw IoError("checkpoint: truncated weights");
            }
        }
        Eigen::Index blen = 0;
        if (!(is >> tag >> idx >> blen) || tag != "b" || idx != l ||
            blen != net.biases[static_cast<size_t>(l)].size()) {
            throw IoError("checkpoint: bad bias block in '" + expect_name + "'");
        }
        Vec& b = net.biases[static_cast<size_t>(l)];
        for (Eigen::Index i = 0; i < blen; ++i) {
            if (!(is >> b(i))) throw IoError("checkpoint: truncated biases");
        }
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const PpnModel& ppn, const EsnModel& esn) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os << kMagic << ' ' << kVersion << '\n';
    os << "model ppn 6\n";
    write_net(os, "E_ped", ppn.e_ped);
    write_net(os, "E_end", ppn.e_end);
    write_net(os, "E_nxt", ppn.e_nxt);
    write_net(os, "E_latent", ppn.e_latent);
    write_net(os, "D_latent", ppn.d_latent);
    write_net(os, "P_future", ppn.p_future);
    os << "model esn 6\n";
    write_net(os, "E_goal", esn.e_goal);
    write_net(os, "E_future", esn.e_future);
    write_net(os, "E_nxt", esn.e_nxt);
    write_net(os, "E_traj", esn.e_traj);
    write_net(os, "E_latent", esn.e_latent);
    write_net(os, "D_latent", esn.d_latent);
    if (!os) throw IoError("checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, PpnModel& ppn, EsnModel& esn) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != kMagic) {
        throw IoError("not a checkpoint file: " + path);
    }
    if (version != kVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }
    std::string tag, name;
    int count = 0;
    if (!(is >> tag >> name >> count) || tag != "model" || name != "ppn" || count != 6) {
        throw IoError("checkpoint: missing ppn section");
    }
    read_net(is, "E_ped", ppn.e_ped);
    read_net(is, "E_end", ppn.e_end);
    read_net(is, "E_nxt", ppn.e_nxt);
    read_net(is, "E_latent", ppn.e_latent);
    read_net(is, "D_latent", ppn.d_latent);
    read_net(is, "P_future", ppn.p_future);
    if (!(is >> tag >> name >> count) || tag != "model" || name != "esn" || count != 6) {
        throw IoError("checkpoint: missing esn section");
    }
    read_net(is, "E_goal", esn.e_goal);
    read_net(is, "E_future", esn.e_future);
    read_net(is, "E_nxt", esn.e_nxt);
    read_net(is, "E_traj", esn.e_traj);
    read_net(is, "E_latent", esn.e_latent);
    read_net(is, "D_latent", esn.d_latent);
}

}  // namespace szn
