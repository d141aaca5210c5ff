#include "szn/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <thread>

#include "szn/checkpoint.hpp"
#include "szn/config.hpp"
#include "szn/errors.hpp"
#include "szn/selftest.hpp"

namespace szn {

namespace {

SampleSets dataset_sets(const std::string& dir, const std::string& holdout, double radius) {
    NamedRecords datasets;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) datasets.emplace(f.stem().string(), load_trajectories(f.string()));
    if (datasets.empty()) throw EmptyDataset("no .txt dataset files in " + dir);

    const SplitResult split = leave_one_out_split(datasets, holdout);
    SampleSets sets;
    for (const auto& [name, records] : split.train) {
        auto w = make_windows(records, 8, 8, radius);
        sets.train.insert(sets.train.end(), w.begin(), w.end());
    }
    for (const auto& [name, records] : split.test) {
        auto w = make_windows(records, 8, 8, radius);
        sets.held_out.insert(sets.held_out.end(), w.begin(), w.end());
    }
    return sets;
}

int run_train(const std::string& data_dir, int synthetic, const std::string& holdout,
              std::uint64_t seed, const std::string& out_path, const std::string& metrics_path,
              SznConfig cfg, int epochs_override) {
    if (epochs_override > 0) cfg.train.epochs = epochs_override;
    cfg.train.seed = seed;

    const SampleSets sets = data_dir.empty()
                                ? make_synthetic_sets(seed, synthetic, cfg.sim.sensor_radius)
                                : dataset_sets(data_dir, holdout, cfg.sim.sensor_radius);
    std::cout << "train samples: " << sets.train.size()
              << ", held-out samples: " << sets.held_out.size() << "\n";

    PpnModel ppn = make_ppn(seed);
    EsnModel esn = make_esn(seed + 1);
    const EvalMetrics before = evaluate_models(ppn, esn, sets.held_out);
    std::cout << "untrained held-out ADE " << before.ade << " m, FDE " << before.fde
              << " m, containment " << before.containment << "\n";

    const TrainResult result = train_models(ppn, esn, sets.train, sets.held_out, cfg.train);
    const EvalMetrics after = result.curve.empty() ? before : result.curve.back().held_out;
    std::cout << "trained held-out ADE " << after.ade << " m, FDE " << after.fde
              << " m, containment " << after.containment << "\n";

    save_checkpoint(out_path, ppn, esn);
    std::cout << "checkpoint written to " << out_path << "\n";
    if (!metrics_path.empty()) {
        write_training_csv(metrics_path, result);
        std::cout << "training curve written to " << metrics_path << "\n";
    }
    return 0;
}

int run_eval(const std::string& ckpt, const std::string& data_dir, int synthetic,
             const std::string& holdout, std::uint64_t seed, SznConfig cfg) {
    PpnModel ppn = make_ppn(0);
    EsnModel esn = make_esn(1);
    load_checkpoint(ckpt, ppn, esn);
    const SampleSets sets = data_dir.empty()
                                ? make_synthetic_sets(seed, synthetic, cfg.sim.sensor_radius)
                                : dataset_sets(data_dir, holdout, cfg.sim.sensor_radius);
    const EvalMetrics m = evaluate_models(ppn, esn, sets.held_out);
    std::cout << "samples " << m.n_samples << "\n";
    std::cout << "ego ADE " << m.ade << " m\n";
    std::cout << "ego FDE " << m.fde << " m\n";
    std::cout << "midpoint containment " << m.containment << "\n";
    std::cout << "pedestrian ADE " << m.ppn_ade << " m\n";
    std::cout << "pedestrian FDE " << m.ppn_fde << " m\n";
    return 0;
}

int run_simulate(int peds, int trials, int steps, std::uint64_t seed, const std::string& ckpt,
                 const std::string& out_dir, SznConfig cfg, int jobs) {
    PpnModel ppn = make_ppn(0);
    EsnModel esn = make_esn(1);
    load_checkpoint(ckpt, ppn, esn);
    cfg.sim.step_cap = steps;

    std::vector<TrialLog> logs(static_cast<size_t>(trials));
    auto run_one = [&](int i) {
        Scenario sc;
        sc.n_peds = peds;
        sc.seed = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1));
        sc.params = cfg.sim;
        run_trial(sc, ppn, esn, cfg.mpc, cfg.lip, cfg.bounds, &logs[static_cast<size_t>(i)]);
    };

    if (jobs <= 0) {
        jobs = static_cast<int>(std::min<unsigned>(std::thread::hardware_concurrency(),
                                                   static_cast<unsigned>(trials)));
        jobs = std::max(jobs, 1);
    }
    if (jobs == 1) {
        for (int i = 0; i < trials; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) {
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    const std::string metrics = export_artifacts(logs, out_dir);
    int successes = 0;
    for (const TrialLog& log : logs) {
        std::cout << "trial " << log.scenario.seed << ": "
                  << (log.metrics.success ? "success" : "timeout") << " in "
                  << log.metrics.steps_to_goal << " steps, min distance "
                  << log.metrics.min_ped_distance << " m, " << log.metrics.infeasible_count
                  << " infeasible solves\n";
        if (log.metrics.success) ++successes;
    }
    std::cout << "success rate " << successes << "/" << trials << "\n";
    std::cout << "metrics written to " << metrics << "\n";
    return 0;
}

int run_selftest() {
    struct Entry {
        const char* name;
        CheckResult result;
    };
    const Entry entries[] = {
        {"geometry-oracle", check_geometry_oracle()},
        {"halfspace", check_halfspace()},
        {"lip-rk4", check_lip_rk4()},
        {"network-gradients", check_network_gradients()},
    };
    bool all = true;
    for (const Entry& e : entries) {
        std::cout << (e.result.pass ? "PASS" : "FAIL") << "  " << e.name << ": "
                  << e.result.detail << "\n";
        all = all && e.result.pass;
    }
    return all ? 0 : 2;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
    CLI::App app{"szn: zonotope-based social navigation for a walking robot"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key = value config file overriding defaults");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the prediction networks");
    std::string data_dir, holdout = "univ", out_path = "szn.ckpt", metrics_path;
    int synthetic = 5000, epochs = 0;
    std::uint64_t seed = 1;
    train_cmd->add_option("--data", data_dir, "directory of crowd dataset .txt files");
    train_cmd->add_option("--synthetic", synthetic, "synthetic crowd training set size");
    train_cmd->add_option("--holdout", holdout, "dataset name held out of training");
    train_cmd->add_option("--epochs", epochs, "override training epochs");
    train_cmd->add_option("--seed", seed, "training seed");
    train_cmd->add_option("--out", out_path, "checkpoint output path");
    train_cmd->add_option("--metrics", metrics_path, "training-curve CSV path");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt, eval_data, eval_holdout = "univ";
    int eval_synth = 1000;
    std::uint64_t eval_seed = 99;
    eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "directory of crowd dataset .txt files");
    eval_cmd->add_option("--holdout", eval_holdout, "dataset evaluated against");
    eval_cmd->add_option("--synthetic", eval_synth, "synthetic evaluation set size");
    eval_cmd->add_option("--seed", eval_seed, "synthetic evaluation seed");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run seeded navigation trials");
    int peds = 5, trials = 10, steps = 100, jobs = 0;
    std::uint64_t sim_seed = 0;
    std::string sim_ckpt, sim_out = "sim_out";
    sim_cmd->add_option("--peds", peds, "pedestrians per trial");
    sim_cmd->add_option("--trials", trials, "number of trials");
    sim_cmd->add_option("--steps", steps, "walking-step cap per trial");
    sim_cmd->add_option("--seed", sim_seed, "base seed");
    sim_cmd->add_option("--ckpt", sim_ckpt, "checkpoint path")->required();
    sim_cmd->add_option("--out", sim_out, "output directory");
    sim_cmd->add_option("--jobs", jobs, "worker threads (0 = auto)");

    // selftest
    app.add_subcommand("selftest", "run the numeric oracle suites");

    std::vector<std::string> argv_vec = args;
    argv_vec.insert(argv_vec.begin(), "szn");
    std::vector<char*> argv;
    argv.reserve(argv_vec.size());
    for (std::string& s : argv_vec) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        SznConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (train_cmd->parsed()) {
            if (!data_dir.empty() && train_cmd->count("--synthetic")) {
                std::cerr << "use either --data or --synthetic, not both\n";
                return 1;
            }
            return run_train(data_dir, synthetic, holdout, seed, out_path, metrics_path, cfg,
                             epochs);
        }
        if (eval_cmd->parsed()) {
            return run_eval(eval_ckpt, eval_data, eval_synth, eval_holdout, eval_seed, cfg);
        }
        if (sim_cmd->parsed()) {
            return run_simulate(peds, trials, steps, sim_seed, sim_ckpt, sim_out, cfg, jobs);
        }
        return run_selftest();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace szn
