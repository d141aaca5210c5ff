#pragma once

#include "szn/train.hpp"

namespace szn::testing {

/// One modestly trained model pair shared by the solver and simulation
/// tests; trained lazily on first use.
struct Models {
    PpnModel ppn = make_ppn(100);
    EsnModel esn = make_esn(101);
    Models() {
        const SampleSets sets = make_synthetic_sets(55, 3000);
        TrainHyper hyper;
        hyper.epochs = 60;
        train_models(ppn, esn, sets.train, sets.held_out, hyper);
    }
};

inline const Models& trained_models() {
    static Models m;
    return m;
}

}  // namespace szn::testing
