#include "szn/train.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "szn/errors.hpp"

namespace szn {

namespace {

Vec normal_vec(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

void accumulate(LossBreakdown& into, const LossBreakdown& add) {
    into.l_ade += add.l_ade;
    into.l_fde += add.l_fde;
    into.l_prev += add.l_prev;
    into.l_nxt += add.l_nxt;
    into.l_g += add.l_g;
    into.l_kl += add.l_kl;
    into.total += add.total;
}

void scale(LossBreakdown& b, double s) {
    b.l_ade *= s;
    b.l_fde *= s;
    b.l_prev *= s;
    b.l_nxt *= s;
    b.l_g *= s;
    b.l_kl *= s;
    b.total *= s;
}

/// Deterministic neighbor predictions (z = 0) and the summed E_future input.
Vec neighbor_feature(const PpnModel& ppn, const TrainingSample& s) {
    std::vector<PpnOutput> preds;
    preds.reserve(s.neighbors.size());
    const Vec zeros = Vec::Zero(kLatentDim);
    for (const NeighborTrack& nb : s.neighbors) {
        preds.push_back(
            ppn_forward(ppn, nb.past, s.ego_next, std::nullopt, RunMode::kInfer, zeros));
    }
    return ped_future_feature(preds);
}

}  // namespace

TrainResult train_models(PpnModel& ppn, EsnModel& esn, const std::vector<TrainingSample>& train_set,
                         const std::vector<TrainingSample>& held_out, const TrainHyper& hyper) {
    if (train_set.empty()) throw EmptyDataset("empty training set");

    std::mt19937_64 rng(hyper.seed);
    PpnGrads ppn_grads = make_grads(ppn);
    EsnGrads esn_grads = make_grads(esn);
    PpnAdam ppn_adam = make_adam_state(ppn);
    EsnAdam esn_adam = make_adam_state(esn);

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    const double lr_decay =
        hyper.epochs > 1 ? std::pow(std::max(hyper.lr_end_fraction, 1e-6),
                                    1.0 / (hyper.epochs - 1))
                         : 1.0;
    AdamHyper adam = hyper.adam;

    const int warmup_epochs =
        static_cast<int>(hyper.shape_warmup_fraction * hyper.epochs);

    TrainResult result;
    for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
        adam.lr = hyper.adam.lr * std::pow(lr_decay, epoch - 1);
        LossWeights weights = hyper.weights;
        if (epoch <= warmup_epochs) {
            weights.prev = 0.0;
            weights.nxt = 0.0;
            weights.size = 0.0;
        }

        std::shuffle(order.begin(), order.end(), rng);
        LossBreakdown ppn_epoch, esn_epoch;
        int ppn_examples = 0;
        int esn_examples = 0;

        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(hyper.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(hyper.batch_size));
            zero_grads(ppn_grads);
            zero_grads(esn_grads);
            int ppn_in_batch = 0;
            int esn_in_batch = 0;

            for (size_t k = start; k < end; ++k) {
                const TrainingSample& s = train_set[order[k]];

                // Pedestrian windows: every neighbor with a ground-truth future.
                for (const NeighborTrack& nb : s.neighbors) {
                    if (!nb.future) continue;
                    const Vec2 truth_ep = nb.future->row(7).transpose();
                    PpnTape tape;
                    const Vec noise = hyper.latent_noise_scale * normal_vec(rng, kLatentDim);
                    const PpnOutput out = ppn_forward(ppn, nb.past, s.ego_next, truth_ep,
                                                      RunMode::kTrain, noise, &tape);
                    const Vec2 anchor = nb.past.row(7).transpose();
                    ZonoLossResult zl = zonotope_losses(out.raw, *nb.future, anchor, hyper.d1,
                                                        hyper.d2, weights, true);
                    const KlResult kl = kl_loss(tape.latent);
                    zl.terms.l_kl = kl.value;
                    zl.terms.total += weights.kl * kl.value;
                    ppn_backward(ppn, tape, zl.d_raw, Vec2::Zero(), weights.kl, ppn_grads);
                    accumulate(ppn_epoch, zl.terms);
                    ++ppn_in_batch;
                }

                // Ego window, conditioned on detached neighbor predictions.
                const Vec feat = neighbor_feature(ppn, s);
                EsnTape tape;
                const Vec noise = hyper.latent_noise_scale * normal_vec(rng, kLatentDim);
                const EsnOutput out = esn_forward(esn, feat, s.goal, s.ego_next, s.agent_future,
                                                  RunMode::kTrain, noise, &tape);
                ZonoLossResult zl = zonotope_losses(out.raw, s.agent_future, Vec2::Zero(),
                                                    hyper.d1, hyper.d2, weights, true);
                const KlResult kl = kl_loss(tape.latent);
                zl.terms.l_kl = kl.value;
                zl.terms.total += weights.kl * kl.value;
                esn_backward(esn, tape, zl.d_raw, weights.kl, esn_grads);
                accumulate(esn_epoch, zl.terms);
                ++esn_in_batch;
            }

            if (ppn_in_batch > 0) {
                scale_grads(ppn_grads, 1.0 / ppn_in_batch);
                adam_update(ppn, ppn_grads, ppn_adam, adam);
            }
            if (esn_in_batch > 0) {
                scale_grads(esn_grads, 1.0 / esn_in_batch);
                adam_update(esn, esn_grads, esn_adam, adam);
            }
            ppn_examples += ppn_in_batch;
            esn_examples += esn_in_batch;
        }

        EpochStats stats;
        stats.epoch = epoch;
        if (ppn_examples > 0) scale(ppn_epoch, 1.0 / ppn_examples);
        if (esn_examples > 0) scale(esn_epoch, 1.0 / esn_examples);
        stats.ppn = ppn_epoch;
        stats.esn = esn_epoch;
        stats.held_out = evaluate_models(ppn, esn, held_out);
        result.curve.push_back(stats);
    }
    return result;
}

EvalMetrics evaluate_models(const PpnModel& ppn, const EsnModel& esn,
                            const std::vector<TrainingSample>& samples) {
    EvalMetrics m;
    const Vec zeros = Vec::Zero(kLatentDim);
    long contained = 0, total_steps = 0;
    long ppn_count = 0;
    for (const TrainingSample& s : samples) {
        const Vec feat = neighbor_feature(ppn, s);
        const EsnOutput out =
            esn_forward(esn, feat, s.goal, s.ego_next, std::nullopt, RunMode::kInfer, zeros);
        double ade = 0.0;
        for (int i = 0; i < kPredSteps; ++i) {
            const Vec2 mid = s.midpoints.row(i).transpose();
            const Zonotope2& z = out.zonotopes[static_cast<size_t>(i)];
            const double err = (z.center - mid).norm();
            ade += err;
            if (i == kPredSteps - 1) m.fde += err;
            if (contains_point(z, mid)) ++contained;
            ++total_steps;
        }
        m.ade += ade / kPredSteps;

        for (const NeighborTrack& nb : s.neighbors) {
            if (!nb.future) continue;
            const PpnOutput p =
                ppn_forward(ppn, nb.past, s.ego_next, std::nullopt, RunMode::kInfer, zeros);
            const Mid7 mid = future_midpoints(*nb.future);
            double pade = 0.0;
            for (int i = 0; i < kPredSteps; ++i) {
                const double err =
                    (p.zonotopes[static_cast<size_t>(i)].center - Vec2(mid(i, 0), mid(i, 1)))
                        .norm();
                pade += err;
                if (i == kPredSteps - 1) m.ppn_fde += err;
            }
            m.ppn_ade += pade / kPredSteps;
            ++ppn_count;
        }
        ++m.n_samples;
    }
    if (m.n_samples > 0) {
        m.ade /= m.n_samples;
        m.fde /= m.n_samples;
        m.containment = total_steps > 0 ? static_cast<double>(contained) / total_steps : 0.0;
    }
    if (ppn_count > 0) {
        m.ppn_ade /= ppn_count;
        m.ppn_fde /= ppn_count;
    }
    return m;
}

LossBreakdown esn_infer_losses(const PpnModel& ppn, const EsnModel& esn,
                               const TrainingSample& sample, const TrainHyper& hyper) {
    const Vec zeros = Vec::Zero(kLatentDim);
    const Vec feat = neighbor_feature(ppn, sample);
    const EsnOutput out =
        esn_forward(esn, feat, sample.goal, sample.ego_next, std::nullopt, RunMode::kInfer, zeros);
    ZonoLossResult zl = zonotope_losses(out.raw, sample.agent_future, Vec2::Zero(), hyper.d1,
                                        hyper.d2, hyper.weights, false);
    return zl.terms;
}

void write_training_csv(const std::string& path, const TrainResult& result) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open training csv for writing: " + path);
    os << "epoch,ppn_ade,ppn_fde,ppn_prev,ppn_nxt,ppn_g,ppn_kl,ppn_total,"
          "esn_ade,esn_fde,esn_prev,esn_nxt,esn_g,esn_kl,esn_total,"
          "val_ade,val_fde,val_containment,val_ppn_ade\n";
    auto put = [&](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        os << ',' << buf;
    };
    for (const EpochStats& e : result.curve) {
        os << e.epoch;
        put(e.ppn.l_ade);
        put(e.ppn.l_fde);
        put(e.ppn.l_prev);
        put(e.ppn.l_nxt);
        put(e.ppn.l_g);
        put(e.ppn.l_kl);
        put(e.ppn.total);
        put(e.esn.l_ade);
        put(e.esn.l_fde);
        put(e.esn.l_prev);
        put(e.esn.l_nxt);
        put(e.esn.l_g);
        put(e.esn.l_kl);
        put(e.esn.total);
        put(e.held_out.ade);
        put(e.held_out.fde);
        put(e.held_out.containment);
        put(e.held_out.ppn_ade);
        os << '\n';
    }
    if (!os) throw IoError("training csv write failed: " + path);
}

}  // namespace szn
