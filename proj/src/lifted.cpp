#include "liftseq/lifted.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "liftseq/rng.hpp"

namespace liftseq {

void LiftedHyperparams::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("lifted: lambda must be positive");
    if (rho0 < 0.0 || rho1 < 0.0 || rho2 < 0.0)
        throw std::invalid_argument("lifted: regularizers must be non-negative");
    if (hidden < 1) throw std::invalid_argument("lifted: hidden size must be >= 1");
}

LiftedRnnModel init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                          std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1 || output_dim < 1)
        throw std::invalid_argument("init_model: dims must be >= 1");
    Rng rng(seed);
    LiftedRnnModel model;
    auto fill = [&rng](std::size_t r, std::size_t c) {
        DenseMatrix m(r, c);
        for (double& v : m.raw()) v = 0.1 * rng.normal();
        return m;
    };
    model.u0 = fill(input_dim, hidden_dim);
    model.w = fill(hidden_dim, hidden_dim);
    model.u1 = fill(hidden_dim, output_dim);
    model.b0.assign(hidden_dim, 0.0);
    model.b1.assign(output_dim, 0.0);
    return model;
}

namespace {

// H_{1,j-1} W + X_j U0 + 1 b0' for one timestep (prev may be null at j = 0).
DenseMatrix hidden_affine(const LiftedRnnModel& model, const DenseMatrix& x_j,
                          const DenseMatrix* prev) {
    DenseMatrix s = matmul(x_j, model.u0);
    if (prev) s += matmul(*prev, model.w);
    add_row_vector(s, model.b0);
    return s;
}

DenseMatrix output_affine(const LiftedRnnModel& model, const DenseMatrix& h_j) {
    DenseMatrix s = matmul(h_j, model.u1);
    add_row_vector(s, model.b1);
    return s;
}

}  // namespace

HiddenStates warm_start_states(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x) {
    HiddenStates states;
    states.states.reserve(x.size());
    const DenseMatrix* prev = nullptr;
    for (const auto& x_j : x) {
        DenseMatrix s = hidden_affine(model, x_j, prev);
        clamp_nonneg(s);
        states.states.push_back(std::move(s));
        prev = &states.states.back();
    }
    return states;
}

void update_weights_layer1(const HiddenStates& states, const std::vector<DenseMatrix>& x,
                           const LiftedHyperparams& hyper, LiftedRnnModel& model) {
    const std::size_t t_len = states.states.size();
    const std::size_t m = states.states[0].rows();
    const std::size_t h = states.states[0].cols();
    const std::size_t i_dim = x[0].cols();
    const std::size_t d = h + i_dim + 1;

    // Vertically stacked design [H_{j-1}, X_j, 1] against stacked H_j.
    DenseMatrix design(m * t_len, d);
    DenseMatrix target(m * t_len, h);
    for (std::size_t j = 0; j < t_len; ++j) {
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t row = j * m + r;
            if (j > 0)
                for (std::size_t c = 0; c < h; ++c) design(row, c) = states.states[j - 1](r, c);
            for (std::size_t c = 0; c < i_dim; ++c) design(row, h + c) = x[j](r, c);
            design(row, d - 1) = 1.0;
            for (std::size_t c = 0; c < h; ++c) target(row, c) = states.states[j](r, c);
        }
    }

    std::vector<double> reg(d, 0.0);
    for (std::size_t c = 0; c < h; ++c) reg[c] = hyper.rho2;
    for (std::size_t c = 0; c < i_dim; ++c) reg[h + c] = hyper.rho0;

    const DenseMatrix theta = ridge_solve(design, target, hyper.lambda, reg);
    model.w = DenseMatrix(h, h);
    model.u0 = DenseMatrix(i_dim, h);
    model.b0.assign(h, 0.0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < h; ++c) model.w(r, c) = theta(r, c);
    for (std::size_t r = 0; r < i_dim; ++r)
        for (std::size_t c = 0; c < h; ++c) model.u0(r, c) = theta(h + r, c);
    for (std::size_t c = 0; c < h; ++c) model.b0[c] = theta(d - 1, c);
}

void update_weights_layer2(const HiddenStates& states, const std::vector<DenseMatrix>& y,
                           const LiftedHyperparams& hyper, const OutputStates* z,
                           LiftedRnnModel& model) {
    const std::size_t t_len = states.states.size();
    const std::size_t m = states.states[0].rows();
    const std::size_t h = states.states[0].cols();

    if (hyper.task == Task::classification &&
        hyper.last_layer_mode == LastLayerMode::softmax_ce) {
        auto fit = multinomial_fit(states.states, y, hyper.rho1, model.u1, model.b1,
                                   hyper.inner_max_iters, hyper.inner_tol);
        model.u1 = std::move(fit.u1);
        model.b1 = std::move(fit.b1);
        return;
    }

    const bool simplex = hyper.task == Task::classification;
    if (simplex && z == nullptr)
        throw std::invalid_argument("update_weights_layer2: simplex_ce needs output states");
    const std::size_t o = simplex ? z->z_states[0].rows() : y[0].cols();

    DenseMatrix design(m * t_len, h + 1);
    DenseMatrix target(m * t_len, o);
    for (std::size_t j = 0; j < t_len; ++j) {
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t row = j * m + r;
            for (std::size_t c = 0; c < h; ++c) design(row, c) = states.states[j](r, c);
            design(row, h) = 1.0;
            for (std::size_t c = 0; c < o; ++c)
                target(row, c) = simplex ? (*z).z_states[j](c, r) : y[j](r, c);
        }
    }
    std::vector<double> reg(h + 1, 0.0);
    for (std::size_t c = 0; c < h; ++c) reg[c] = hyper.rho1;

    const DenseMatrix theta = ridge_solve(design, target, hyper.lambda, reg);
    model.u1 = DenseMatrix(h, o);
    model.b1.assign(o, 0.0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < o; ++c) model.u1(r, c) = theta(r, c);
    for (std::size_t c = 0; c < o; ++c) model.b1[c] = theta(h, c);
}

namespace {

double cross_entropy_rows(const DenseMatrix& scores, const DenseMatrix& y) {
    double total = 0.0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        double rowmax = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < scores.cols(); ++j) rowmax = std::max(rowmax, scores(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < scores.cols(); ++j) lse += std::exp(scores(i, j) - rowmax);
        lse = rowmax + std::log(lse);
        for (std::size_t j = 0; j < scores.cols(); ++j)
            if (y(i, j) != 0.0) total += y(i, j) * (lse - scores(i, j));
    }
    return total;
}

// Projected gradient with backtracking for the softmax_ce state block:
//   lambda*||H - A||^2 + lambda*[fwd]*||B - H W||^2 + CE(Y, H U1 + 1 b1')
DenseMatrix solve_state_softmax(DenseMatrix h, const DenseMatrix& a, const DenseMatrix* b,
                                const DenseMatrix& y_j, const LiftedRnnModel& model,
                                const LiftedHyperparams& hyper) {
    const double lambda = hyper.lambda;

    auto objective = [&](const DenseMatrix& hh) {
        double f = lambda * frobenius_sq(hh - a);
        if (b) f += lambda * frobenius_sq(*b - matmul(hh, model.w));
        DenseMatrix scores = matmul(hh, model.u1);
        add_row_vector(scores, model.b1);
        f += cross_entropy_rows(scores, y_j);
        return f;
    };
    auto gradient = [&](const DenseMatrix& hh) {
        DenseMatrix g = hh - a;
        for (double& v : g.raw()) v *= 2.0 * lambda;
        if (b) {
            DenseMatrix resid = matmul(hh, model.w);
            resid -= *b;
            axpy(g, 2.0 * lambda, matmul_a_bt(resid, model.w));
        }
        DenseMatrix scores = matmul(hh, model.u1);
        add_row_vector(scores, model.b1);
        DenseMatrix diff = softmax_rows(scores);
        diff -= y_j;
        g += matmul_a_bt(diff, model.u1);
        return g;
    };

    double f = objective(h);
    for (std::size_t it = 0; it < hyper.inner_max_iters; ++it) {
        const DenseMatrix g = gradient(h);
        // Projected-gradient stationarity: ||H - P(H - grad)||_inf.
        double resid = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double proj = std::max(0.0, h.raw()[i] - g.raw()[i]);
            resid = std::max(resid, std::abs(h.raw()[i] - proj));
        }
        if (resid <= hyper.inner_tol * (1.0 + max_abs(g))) break;

        double step = 1.0;
        while (true) {
            DenseMatrix h_try = h;
            axpy(h_try, -step, g);
            clamp_nonneg(h_try);
            const DenseMatrix d = h_try - h;
            const double f_try = objective(h_try);
            if (f_try <= f + dot(g, d) + frobenius_sq(d) / (2.0 * step)) {
                h = std::move(h_try);
                f = f_try;
                break;
            }
            step *= 0.5;
            if (step < 1e-16) throw LineSearchStall("update_state: line search stalled");
        }
    }
    return h;
}

}  // namespace

void update_state(std::size_t j, HiddenStates& states, const LiftedRnnModel& model,
                  const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                  const LiftedHyperparams& hyper, const OutputStates* z) {
    const std::size_t t_len = states.states.size();
    if (j >= t_len) throw std::out_of_range("update_state: time index");
    const std::size_t h = states.states[j].cols();

    const DenseMatrix* prev = j > 0 ? &states.states[j - 1] : nullptr;
    const DenseMatrix anchor = hidden_affine(model, x[j], prev);

    // Forward-coupling target H_{1,j+1} - X_{j+1} U0 - 1 b0'; absent at
    // the last timestep.
    DenseMatrix fwd;
    const bool has_fwd = j + 1 < t_len;
    if (has_fwd) {
        fwd = states.states[j + 1] - matmul(x[j + 1], model.u0);
        std::vector<double> neg_b0 = model.b0;
        for (double& v : neg_b0) v = -v;
        add_row_vector(fwd, neg_b0);
    }

    if (hyper.task == Task::classification &&
        hyper.last_layer_mode == LastLayerMode::softmax_ce) {
        states.states[j] = solve_state_softmax(states.states[j], anchor, has_fwd ? &fwd : nullptr,
                                               y[j], model, hyper);
        return;
    }

    std::vector<WeightedFactorTerm> terms;
    terms.push_back({DenseMatrix::identity(h), anchor, hyper.lambda});
    if (has_fwd) terms.push_back({model.w, std::move(fwd), hyper.lambda});

    DenseMatrix target;
    if (hyper.task == Task::regression) {
        target = y[j];
    } else {
        if (z == nullptr)
            throw std::invalid_argument("update_state: simplex_ce needs output states");
        target = transpose(z->z_states[j]);
    }
    std::vector<double> neg_b1 = model.b1;
    for (double& v : neg_b1) v = -v;
    add_row_vector(target, neg_b1);
    terms.push_back({model.u1, std::move(target), hyper.lambda});

    states.states[j] =
        nnls_solve(terms, states.states[j], hyper.inner_max_iters, hyper.inner_tol).h;
}

OutputStates update_output_states(const HiddenStates& states, const std::vector<DenseMatrix>& y,
                                  const LiftedRnnModel& model, const LiftedHyperparams& hyper) {
    OutputStates out;
    out.z_states.reserve(states.states.size());
    for (std::size_t j = 0; j < states.states.size(); ++j) {
        const DenseMatrix logits_t = transpose(output_affine(model, states.states[j]));
        out.z_states.push_back(
            simplex_entropy_prox_batch(logits_t, transpose(y[j]), hyper.lambda, 1e-10));
    }
    return out;
}

double lifted_objective(const LiftedRnnModel& model, const HiddenStates& states,
                        const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                        const LiftedHyperparams& hyper, const OutputStates* z) {
    const std::size_t t_len = states.states.size();
    double f = hyper.rho0 * frobenius_sq(model.u0) + hyper.rho1 * frobenius_sq(model.u1) +
               hyper.rho2 * frobenius_sq(model.w);

    for (std::size_t j = 0; j < t_len; ++j) {
        const DenseMatrix* prev = j > 0 ? &states.states[j - 1] : nullptr;
        f += hyper.lambda * frobenius_sq(states.states[j] - hidden_affine(model, x[j], prev));

        const DenseMatrix scores = output_affine(model, states.states[j]);
        if (hyper.task == Task::regression) {
            f += hyper.lambda * frobenius_sq(y[j] - scores);
        } else if (hyper.last_layer_mode == LastLayerMode::softmax_ce) {
            f += cross_entropy_rows(scores, y[j]);
        } else {
            if (z == nullptr)
                throw std::invalid_argument("lifted_objective: simplex_ce needs output states");
            const DenseMatrix& z_j = z->z_states[j];
            for (std::size_t c = 0; c < z_j.cols(); ++c)
                for (std::size_t r = 0; r < z_j.rows(); ++r)
                    if (y[j](c, r) != 0.0) f -= y[j](c, r) * std::log(z_j(r, c));
            f += hyper.lambda * frobenius_sq(z_j - transpose(scores));
        }
    }
    return f;
}

TrainResult train_bcd(const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                      const LiftedHyperparams& hyper, std::uint64_t seed) {
    hyper.validate();
    if (x.empty() || x.size() != y.size())
        throw DimensionMismatch("train_bcd: need equal nonzero numbers of x and y slices");

    const std::size_t i_dim = x[0].cols();
    const std::size_t o_dim = y[0].cols();
    const bool simplex =
        hyper.task == Task::classification && hyper.last_layer_mode == LastLayerMode::simplex_ce;

    TrainResult result;
    result.model = init_model(i_dim, hyper.hidden, o_dim, seed);
    HiddenStates states = warm_start_states(result.model, x);
    OutputStates z;
    if (simplex) z = update_output_states(states, y, result.model, hyper);

    double prev = lifted_objective(result.model, states, x, y, hyper, simplex ? &z : nullptr);
    result.trace.push_back(prev);

    for (std::size_t sweep = 0; sweep < hyper.sweeps; ++sweep) {
        update_weights_layer1(states, x, hyper, result.model);
        update_weights_layer2(states, y, hyper, simplex ? &z : nullptr, result.model);
        if (simplex) z = update_output_states(states, y, result.model, hyper);
        for (std::size_t j = 0; j < x.size(); ++j)
            update_state(j, states, result.model, x, y, hyper, simplex ? &z : nullptr);

        const double obj =
            lifted_objective(result.model, states, x, y, hyper, simplex ? &z : nullptr);
        result.trace.push_back(obj);
        if (prev - obj < 1e-4 * std::abs(prev)) break;
        prev = obj;
    }
    return result;
}

std::vector<DenseMatrix> predict(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x,
                                 Task task) {
    std::vector<DenseMatrix> out;
    out.reserve(x.size());
    DenseMatrix prev;
    for (std::size_t j = 0; j < x.size(); ++j) {
        DenseMatrix s = hidden_affine(model, x[j], j > 0 ? &prev : nullptr);
        clamp_nonneg(s);
        DenseMatrix scores = output_affine(model, s);
        out.push_back(task == Task::classification ? softmax_rows(scores) : std::move(scores));
        prev = std::move(s);
    }
    return out;
}

double accuracy(const std::vector<DenseMatrix>& predicted, const std::vector<DenseMatrix>& y) {
    if (predicted.size() != y.size())
        throw DimensionMismatch("accuracy: timestep counts differ");
    std::size_t hits = 0, total = 0;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
        if (!predicted[j].same_shape(y[j])) throw DimensionMismatch("accuracy: slice shapes");
        for (std::size_t r = 0; r < predicted[j].rows(); ++r) {
            std::size_t pred_arg = 0, true_arg = 0;
            for (std::size_t c = 1; c < predicted[j].cols(); ++c) {
                if (predicted[j](r, c) > predicted[j](r, pred_arg)) pred_arg = c;
                if (y[j](r, c) > y[j](r, true_arg)) true_arg = c;
            }
            hits += pred_arg == true_arg ? 1 : 0;
            ++total;
        }
    }
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

}  // namespace liftseq
