#pragma once

#include <cstdint>
#include <vector>

#include "liftseq/lifted.hpp"
#include "liftseq/matrix.hpp"

namespace liftseq {

struct SgdConfig {
    double lr0 = 1e-4;
    double decay = 0.9;
    std::size_t decay_every = 1000;
    std::size_t batch_size = 100;
    double rho = 1e-3;  // applied as rho0 = rho1 = rho2
    std::size_t steps = 5000;
    std::size_t hidden = 10;
    std::uint64_t seed = 0;
};

/// Cached forward pass: pre-activations are kept for BPTT.
struct ForwardCache {
    std::vector<DenseMatrix> pre;     // T slices m x h, before ReLU
    std::vector<DenseMatrix> hidden;  // T slices m x h
    std::vector<DenseMatrix> logits;  // T slices m x o, raw scores
};

struct Gradients {
    DenseMatrix u0, w, u1;
    std::vector<double> b0, b1;
};

ForwardCache forward(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x);

/// Mean softmax cross entropy over (sample, timestep) plus the rho
/// weight penalties.
double loss(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x,
            const std::vector<DenseMatrix>& y, double rho);

/// Exact gradient of loss() by backpropagation through time; the ReLU
/// subgradient at 0 is taken as 0.
Gradients grad_bptt(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x,
                    const std::vector<DenseMatrix>& y, double rho);

struct SgdResult {
    LiftedRnnModel model;
    std::vector<double> loss_trace;  // per-step mini-batch loss
};

SgdResult sgd_train(const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                    const SgdConfig& config);

}  // namespace liftseq
