#pragma once

#include <cstdint>
#include <vector>

#include "liftseq/matrix.hpp"
#include "liftseq/solvers.hpp"

namespace liftseq {

enum class Task { classification, regression };

enum class LastLayerMode { softmax_ce, simplex_ce };

struct LiftedHyperparams {
    double lambda = 0.1;  // single coupling penalty weight
    double rho0 = 0.1;    // regularizer on U0
    double rho1 = 0.1;    // regularizer on U1
    double rho2 = 0.1;    // regularizer on W
    std::size_t hidden = 10;
    std::size_t sweeps = 30;
    double inner_tol = 1e-8;
    std::size_t inner_max_iters = 500;
    Task task = Task::classification;
    LastLayerMode last_layer_mode = LastLayerMode::softmax_ce;

    void validate() const;
};

struct LiftedRnnModel {
    DenseMatrix u0;          // i x h
    DenseMatrix w;           // h x h
    std::vector<double> b0;  // h
    DenseMatrix u1;          // h x o
    std::vector<double> b1;  // o
};

/// The T lifted hidden-state matrices, each m x h and entrywise
/// non-negative. The zero matrix stands in for the state before t = 0
/// and is never stored.
struct HiddenStates {
    std::vector<DenseMatrix> states;
};

/// simplex_ce mode only: per-timestep output matrices, o x m with
/// columns on the probability simplex.
struct OutputStates {
    std::vector<DenseMatrix> z_states;
};

/// Weights i.i.d. Normal(0, 0.1^2) drawn in order U0, W, U1 (row-major
/// within each); biases zero.
LiftedRnnModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                          std::uint64_t seed);

/// Feedforward ReLU recursion; feasible by construction.
HiddenStates warm_start_states(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x);

/// Joint ridge update of (W, U0, b0) on the timestep-stacked design
/// [H_{j-1}, X_j, 1].
void update_weights_layer1(const HiddenStates& states, const std::vector<DenseMatrix>& x,
                           const LiftedHyperparams& hyper, LiftedRnnModel& model);

/// (U1, b1) update: ridge against Y (regression) or the output states
/// (simplex_ce), multinomial logistic warm-started at the current
/// weights (softmax_ce).
void update_weights_layer2(const HiddenStates& states, const std::vector<DenseMatrix>& y,
                           const LiftedHyperparams& hyper, const OutputStates* z,
                           LiftedRnnModel& model);

/// Exact convex solve (NNLS or projected gradient) for H_{1,j} with
/// every other block held fixed; warm-started at the current state.
void update_state(std::size_t j, HiddenStates& states, const LiftedRnnModel& model,
                  const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                  const LiftedHyperparams& hyper, const OutputStates* z);

/// Per timestep, the simplex-entropy prox of the current output logits.
OutputStates update_output_states(const HiddenStates& states, const std::vector<DenseMatrix>& y,
                                  const LiftedRnnModel& model, const LiftedHyperparams& hyper);

double lifted_objective(const LiftedRnnModel& model, const HiddenStates& states,
                        const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                        const LiftedHyperparams& hyper, const OutputStates* z = nullptr);

struct TrainResult {
    LiftedRnnModel model;
    std::vector<double> trace;  // objective at init, then after each sweep
};

/// Block-coordinate descent: weights, [output states], then the hidden
/// states cyclically in time order, per sweep. Early-stops once the
/// relative objective decrease over a sweep falls below 1e-4.
TrainResult train_bcd(const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                      const LiftedHyperparams& hyper, std::uint64_t seed);

/// Feedforward prediction; softmax rows per timestep for
/// classification, raw affine output for regression.
std::vector<DenseMatrix> predict(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x,
                                 Task task);

/// Fraction of (sample, timestep) argmax matches; ties break toward the
/// lowest index.
double accuracy(const std::vector<DenseMatrix>& predicted, const std::vector<DenseMatrix>& y);

}  // namespace liftseq
