#pragma once

#include <string>
#include <vector>

#include "szn/data.hpp"
#include "szn/networks.hpp"

namespace szn {

struct TrainHyper {
    int epochs = 100;
    int batch_size = 16;
    std::uint64_t seed = 1;
    AdamHyper adam;
    /// Learning rate decays exponentially per epoch down to
    /// adam.lr * lr_end_fraction at the final epoch.
    double lr_end_fraction = 0.05;
    /// The containment and size terms switch on after this fraction of the
    /// epochs; fitting centers first keeps the zonotopes from collapsing
    /// around a single point early on.
    double shape_warmup_fraction = 0.4;
    /// Center tracking outweighs the shaping terms; at uniform weights the
    /// chain terms drag the centers together and displacement error roughly
    /// quadruples.
    LossWeights weights{5.0, 5.0, 0.5, 0.5, 0.015, 1.0};
    /// Scale on the posterior noise draws; 0 trains a deterministic
    /// autoencoder (useful for capacity checks).
    double latent_noise_scale = 1.0;
    double d1 = 0.1;    // m, first generator target length
    double d2 = 0.005;  // m, remaining generator target lengths
};

struct EvalMetrics {
    double ade = 0.0;          // ego predictions vs truth midpoints
    double fde = 0.0;
    double containment = 0.0;  // fraction of truth midpoints inside their zonotope
    double ppn_ade = 0.0;      // pedestrian sub-windows, when present
    double ppn_fde = 0.0;
    int n_samples = 0;
};

struct EpochStats {
    int epoch = 0;
    LossBreakdown ppn;  // batch means
    LossBreakdown esn;
    EvalMetrics held_out;
};

struct TrainResult {
    std::vector<EpochStats> curve;
};

/**
 * Minibatch Adam on both networks. Pedestrian windows are the neighbors that
 * carry futures: each trains the prediction network against that neighbor's
 * ground truth, conditioned on the window agent's next displacement. The ego
 * network trains on the window agent itself, conditioned on the summed
 * deterministic predictions for its neighbors (no gradient flows between the
 * two models). Throws EmptyDataset when train_set is empty.
 */
TrainResult train_models(PpnModel& ppn, EsnModel& esn, const std::vector<TrainingSample>& train_set,
                         const std::vector<TrainingSample>& held_out, const TrainHyper& hyper);

/// Deterministic z = 0 evaluation of both networks on a sample set.
EvalMetrics evaluate_models(const PpnModel& ppn, const EsnModel& esn,
                            const std::vector<TrainingSample>& samples);

/// ESN infer-mode loss terms on one sample (z = 0); used by overfit checks.
LossBreakdown esn_infer_losses(const PpnModel& ppn, const EsnModel& esn,
                               const TrainingSample& sample, const TrainHyper& hyper);

/// Epoch curve as CSV: losses per network plus held-out metrics.
void write_training_csv(const std::string& path, const TrainResult& result);

}  // namespace szn
