#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "szn/errors.hpp"
#include "szn/train.hpp"

using namespace szn;

TEST_CASE("one epoch over a few samples yields finite losses") {
    const SampleSets sets = make_synthetic_sets(3, 10);
    REQUIRE(sets.train.size() == 10);
    PpnModel ppn = make_ppn(1);
    EsnModel esn = make_esn(2);
    TrainHyper hyper;
    hyper.epochs = 1;
    const TrainResult r = train_models(ppn, esn, sets.train, sets.held_out, hyper);
    REQUIRE(r.curve.size() == 1);
    CHECK(std::isfinite(r.curve[0].esn.total));
    CHECK(std::isfinite(r.curve[0].ppn.total));
    CHECK(r.curve[0].esn.l_ade >= 0.0);
    CHECK(std::isfinite(r.curve[0].held_out.ade));
}

TEST_CASE("training shrinks held-out displacement error") {
    const SampleSets sets = make_synthetic_sets(11, 400);
    PpnModel ppn = make_ppn(5);
    EsnModel esn = make_esn(6);
    TrainHyper hyper;
    hyper.epochs = 20;
    const EvalMetrics before = evaluate_models(ppn, esn, sets.held_out);
    const TrainResult r = train_models(ppn, esn, sets.train, sets.held_out, hyper);
    const EvalMetrics after = r.curve.back().held_out;
    CHECK(after.ade < 0.5 * before.ade);
}

TEST_CASE("a single sample can be overfitted") {
    SampleSets sets = make_synthetic_sets(21, 40);
    // Pick a neighbor-free sample so the ego network carries the whole fit.
    TrainingSample sample = sets.train.front();
    for (const TrainingSample& s : sets.train) {
        if (s.neighbors.empty()) {
            sample = s;
            break;
        }
    }
    sample.neighbors.clear();
    const std::vector<TrainingSample> one{sample};
    PpnModel ppn = make_ppn(7);
    EsnModel esn = make_esn(8);
    TrainHyper hyper;
    hyper.epochs = 2000;
    hyper.batch_size = 1;
    hyper.latent_noise_scale = 0.0;
    train_models(ppn, esn, one, one, hyper);
    const LossBreakdown terms = esn_infer_losses(ppn, esn, sample, hyper);
    CHECK(terms.l_ade < 1e-2);
}

TEST_CASE("empty training set is rejected") {
    PpnModel ppn = make_ppn(1);
    EsnModel esn = make_esn(2);
    CHECK_THROWS_AS(train_models(ppn, esn, {}, {}, TrainHyper{}), EmptyDataset);
}

TEST_CASE("training curve csv has one row per epoch") {
    const SampleSets sets = make_synthetic_sets(31, 12);
    PpnModel ppn = make_ppn(3);
    EsnModel esn = make_esn(4);
    TrainHyper hyper;
    hyper.epochs = 3;
    const TrainResult r = train_models(ppn, esn, sets.train, sets.held_out, hyper);
    const std::string path =
        (std::filesystem::temp_directory_path() / "szn_curve.csv").string();
    write_training_csv(path, r);
    std::ifstream is(path);
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 4);  // header + 3 epochs
    std::filesystem::remove(path);
}
