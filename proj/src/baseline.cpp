#include "liftseq/baseline.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "liftseq/rng.hpp"
#include "liftseq/solvers.hpp"

namespace liftseq {

ForwardCache forward(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x) {
    ForwardCache cache;
    const std::size_t t_len = x.size();
    cache.pre.reserve(t_len);
    cache.hidden.reserve(t_len);
    cache.logits.reserve(t_len);
    for (std::size_t j = 0; j < t_len; ++j) {
        DenseMatrix s = matmul(x[j], model.u0);
        if (j > 0) s += matmul(cache.hidden[j - 1], model.w);
        add_row_vector(s, model.b0);
        cache.pre.push_back(s);
        clamp_nonneg(s);
        DenseMatrix logits = matmul(s, model.u1);
        add_row_vector(logits, model.b1);
        cache.hidden.push_back(std::move(s));
        cache.logits.push_back(std::move(logits));
    }
    return cache;
}

namespace {

double mean_cross_entropy(const std::vector<DenseMatrix>& logits,
                          const std::vector<DenseMatrix>& y) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        const DenseMatrix& s = logits[j];
        for (std::size_t r = 0; r < s.rows(); ++r) {
            double rowmax = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < s.cols(); ++c) rowmax = std::max(rowmax, s(r, c));
            double lse = 0.0;
            for (std::size_t c = 0; c < s.cols(); ++c) lse += std::exp(s(r, c) - rowmax);
            lse = rowmax + std::log(lse);
            for (std::size_t c = 0; c < s.cols(); ++c)
                if (y[j](r, c) != 0.0) total += y[j](r, c) * (lse - s(r, c));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace

double loss(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x,
            const std::vector<DenseMatrix>& y, double rho) {
    const ForwardCache cache = forward(model, x);
    return mean_cross_entropy(cache.logits, y) +
           rho * (frobenius_sq(model.u0) + frobenius_sq(model.u1) + frobenius_sq(model.w));
}

Gradients grad_bptt(const LiftedRnnModel& model, const std::vector<DenseMatrix>& x,
                    const std::vector<DenseMatrix>& y, double rho) {
    const std::size_t t_len = x.size();
    const std::size_t m = x[0].rows();
    const std::size_t h = model.w.rows();
    const std::size_t o = model.u1.cols();
    const double scale = 1.0 / static_cast<double>(m * t_len);

    const ForwardCache cache = forward(model, x);

    Gradients g;
    g.u0 = DenseMatrix(model.u0.rows(), h);
    g.w = DenseMatrix(h, h);
    g.u1 = DenseMatrix(h, o);
    g.b0.assign(h, 0.0);
    g.b1.assign(o, 0.0);

    // Backward over time; carry is dL/dH_{j} contributions from t > j.
    DenseMatrix carry(m, h);
    for (std::size_t jj = t_len; jj-- > 0;) {
        DenseMatrix d_out = softmax_rows(cache.logits[jj]);
        d_out -= y[jj];
        for (double& v : d_out.raw()) v *= scale;

        g.u1 += matmul_at_b(cache.hidden[jj], d_out);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < o; ++c) g.b1[c] += d_out(r, c);

        DenseMatrix d_hidden = matmul_a_bt(d_out, model.u1);
        d_hidden += carry;
        // Through the ReLU; derivative at exactly 0 is 0.
        for (std::size_t i = 0; i < d_hidden.size(); ++i)
            if (cache.pre[jj].raw()[i] <= 0.0) d_hidden.raw()[i] = 0.0;

        g.u0 += matmul_at_b(x[jj], d_hidden);
        if (jj > 0) g.w += matmul_at_b(cache.hidden[jj - 1], d_hidden);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < h; ++c) g.b0[c] += d_hidden(r, c);

        carry = matmul_a_bt(d_hidden, model.w);
    }

    axpy(g.u0, 2.0 * rho, model.u0);
    axpy(g.w, 2.0 * rho, model.w);
    axpy(g.u1, 2.0 * rho, model.u1);
    return g;
}

SgdResult sgd_train(const std::vector<DenseMatrix>& x, const std::vector<DenseMatrix>& y,
                    const SgdConfig& config) {
    if (x.empty() || x.size() != y.size())
        throw DimensionMismatch("sgd_train: need equal nonzero numbers of x and y slices");
    const std::size_t m = x[0].rows();
    if (config.batch_size < 1 || config.batch_size > m)
        throw std::invalid_argument("sgd_train: batch_size must be in [1, m]");
    if (config.steps < 1) throw std::invalid_argument("sgd_train: steps must be >= 1");

    const std::size_t t_len = x.size();
    const std::size_t i_dim = x[0].cols();
    const std::size_t o_dim = y[0].cols();

    SgdResult result;
    result.model = init_model(i_dim, config.hidden, o_dim, config.seed);
    result.loss_trace.reserve(config.steps);

    // Mini-batch stream: reshuffle the sample order once an epoch runs out.
    Rng rng(config.seed + 1);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = m;  // forces an initial shuffle

    std::vector<DenseMatrix> bx(t_len), by(t_len);
    for (std::size_t step = 0; step < config.steps; ++step) {
        if (cursor + config.batch_size > m) {
            for (std::size_t i = m - 1; i > 0; --i) {
                const auto k = static_cast<std::size_t>(rng.uniform_int(i + 1));
                std::swap(order[i], order[k]);
            }
            cursor = 0;
        }
        for (std::size_t j = 0; j < t_len; ++j) {
            bx[j] = DenseMatrix(config.batch_size, i_dim);
            by[j] = DenseMatrix(config.batch_size, o_dim);
            for (std::size_t r = 0; r < config.batch_size; ++r) {
                const std::size_t src = order[cursor + r];
                for (std::size_t c = 0; c < i_dim; ++c) bx[j](r, c) = x[j](src, c);
                for (std::size_t c = 0; c < o_dim; ++c) by[j](r, c) = y[j](src, c);
            }
        }
        cursor += config.batch_size;

        const double lr =
            config.lr0 * std::pow(config.decay, static_cast<double>(step / config.decay_every));
        result.loss_trace.push_back(loss(result.model, bx, by, config.rho));
        const Gradients g = grad_bptt(result.model, bx, by, config.rho);
        axpy(result.model.u0, -lr, g.u0);
        axpy(result.model.w, -lr, g.w);
        axpy(result.model.u1, -lr, g.u1);
        for (std::size_t c = 0; c < config.hidden; ++c) result.model.b0[c] -= lr * g.b0[c];
        for (std::size_t c = 0; c < o_dim; ++c) result.model.b1[c] -= lr * g.b1[c];
    }
    return result;
}

}  // namespace liftseq
