#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liftseq/baseline.hpp"
#include "liftseq/datasets.hpp"
#include "liftseq/lifted.hpp"

namespace liftseq {

enum class SweepVariable { length, max_dependency, lag };

struct ExperimentConfig {
    GeneratorSpec base_spec;
    SweepVariable sweep = SweepVariable::length;
    std::vector<std::size_t> values;
    std::vector<std::string> methods;  // subset of {"lifted", "sgd"}
    std::size_t repeats = 5;
    std::size_t train_size = 200;
    std::size_t test_size = 1000;
    LiftedHyperparams lifted;
    SgdConfig sgd;
    std::uint64_t base_seed = 0;
    // max_dependency sweeps rebalance on_fraction per timer value unless
    // the config pins one.
    bool calibrate_timer = false;

    void validate() const;
    static ExperimentConfig parse(const std::string& json_text);
};

struct ResultRow {
    std::string dataset;
    std::size_t value = 0;
    std::string method;
    double mean_acc = 0.0;
    double std_acc = 0.0;  // population std over repeats
    double seconds = 0.0;
    std::vector<std::uint64_t> seeds;
};

/// Runs every (value, method) cell: per repeat r, train on a fresh draw
/// with seed base+r, test on seed base+10000+r, aggregate mean and
/// population std. Repeats may run on parallel workers
/// (LIFTED_SEQ_THREADS, 0 = auto); aggregation order is by repeat
/// index.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

std::string results_to_csv(const std::vector<ResultRow>& rows);

std::string model_to_json(const LiftedRnnModel& model);
LiftedRnnModel model_from_json(const std::string& text);

LiftedHyperparams lifted_hyper_from_json(const std::string& text);
SgdConfig sgd_config_from_json(const std::string& text);

}  // namespace liftseq
