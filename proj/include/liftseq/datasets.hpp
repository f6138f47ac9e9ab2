#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liftseq/matrix.hpp"

namespace liftseq {

enum class GeneratorKind { sum_threshold, timer, ar2, lag_echo };

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::sum_threshold;
    std::size_t length = 1;  // T

    // timer
    std::size_t timer_max = 1;  // p, largest timer value
    double on_fraction = 0.08;

    // ar2
    double ar_a1 = -0.6;
    double ar_a2 = 0.3;

    // lag_echo
    std::size_t num_classes = 2;
    std::size_t lag = 1;

    void validate() const;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::string name() const;

    static GeneratorSpec parse(const std::string& json_text);
    std::string to_json() const;
};

struct DatasetMeta {
    std::string generator;
    std::string params_json;  // generator parameters, one JSON object
    std::uint64_t seed = 0;
    std::size_t m = 0, i = 0, o = 0, T = 0;
};

/// Inputs and one-hot labels stored as T time slices of shape m x i and
/// m x o respectively.
struct SequenceDataset {
    std::vector<DenseMatrix> x;
    std::vector<DenseMatrix> y;
    DatasetMeta meta;
};

/// Class 0 ("on") where the running sum of x is > 0, class 1 otherwise
/// (a tie at exactly zero counts as off). Result is one-hot 2 x T.
DenseMatrix sum_threshold_labels(const std::vector<double>& x);

struct TimerLabels {
    DenseMatrix y;  // one-hot 2 x T
    std::vector<int> running_timer;
};

/// Running timer: decays by one per step (floored at zero), then an
/// "on" switch raises it to max(RT, timer value). Class 0 iff RT > 0.
TimerLabels timer_labels(const std::vector<int>& timer_values, const std::vector<int>& switches);

SequenceDataset generate(const GeneratorSpec& spec, std::size_t m, std::uint64_t seed);

std::string serialize(const SequenceDataset& ds);
SequenceDataset deserialize(const std::string& text);

/// Bisects the timer on_fraction until the on-class share over 10k
/// samples of length T lands in [0.48, 0.52].
double calibrate_on_fraction(std::size_t timer_max, std::size_t length);

}  // namespace liftseq
