#pragma once

// Independent oracles for the solver and model tests. Everything here
// is deliberately written against the math, not against the library
// implementation: explicit inverses, naive loops, tiny-step descent.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "liftseq/matrix.hpp"
#include "liftseq/solvers.hpp"

namespace oracles {

using liftseq::DenseMatrix;

// Gauss-Jordan inverse with partial pivoting.
inline DenseMatrix dense_inverse(DenseMatrix a) {
    const std::size_t n = a.rows();
    DenseMatrix inv = DenseMatrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        for (std::size_t c = 0; c < n; ++c) {
            std::swap(a(col, c), a(pivot, c));
            std::swap(inv(col, c), inv(pivot, c));
        }
        const double d = a(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            a(col, c) /= d;
            inv(col, c) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            for (std::size_t c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

// Ridge minimizer via the explicit inverse of the normal matrix.
inline DenseMatrix ridge_by_inverse(const DenseMatrix& a, const DenseMatrix& b, double lambda,
                                    const std::vector<double>& reg) {
    DenseMatrix normal = liftseq::matmul_at_b(a, a);
    for (double& v : normal.raw()) v *= lambda;
    for (std::size_t i = 0; i < normal.rows(); ++i) normal(i, i) += reg[i];
    DenseMatrix rhs = liftseq::matmul_at_b(a, b);
    for (double& v : rhs.raw()) v *= lambda;
    return liftseq::matmul(dense_inverse(normal), rhs);
}

// Long-run projected gradient for the weighted-factor NNLS objective,
// tiny conservative step, run until the iterate stalls at 1e-12.
inline DenseMatrix nnls_long_run(const std::vector<liftseq::WeightedFactorTerm>& terms,
                                 DenseMatrix h) {
    double trace_bound = 0.0;
    for (const auto& t : terms) {
        double tr = 0.0;
        for (std::size_t r = 0; r < t.right_factor.rows(); ++r)
            for (std::size_t c = 0; c < t.right_factor.cols(); ++c)
                tr += t.right_factor(r, c) * t.right_factor(r, c);
        trace_bound += 2.0 * t.weight * tr;
    }
    const double step = 0.5 / std::max(trace_bound, 1e-12);
    liftseq::clamp_nonneg(h);
    for (int it = 0; it < 2000000; ++it) {
        DenseMatrix grad(h.rows(), h.cols());
        for (const auto& t : terms) {
            DenseMatrix resid = liftseq::matmul(h, t.right_factor);
            resid -= t.target;
            liftseq::axpy(grad, 2.0 * t.weight, liftseq::matmul_a_bt(resid, t.right_factor));
        }
        DenseMatrix next = h;
        liftseq::axpy(next, -step, grad);
        liftseq::clamp_nonneg(next);
        const double moved = liftseq::max_abs(next - h);
        h = std::move(next);
        if (moved <= 1e-12 * step) break;
    }
    return h;
}

inline double nnls_objective(const std::vector<liftseq::WeightedFactorTerm>& terms,
                             const DenseMatrix& h) {
    double f = 0.0;
    for (const auto& t : terms)
        f += t.weight * liftseq::frobenius_sq(liftseq::matmul(h, t.right_factor) - t.target);
    return f;
}

// Euclidean projection onto the probability simplex (sorting method).
inline std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, tau = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cum += u[i];
        const double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            tau = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(0.0, x - tau);
    return v;
}

inline double simplex_entropy_objective(const std::vector<double>& z,
                                        const std::vector<double>& x0,
                                        const std::vector<double>& y, double lambda) {
    double f = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (y[i] != 0.0) {
            if (z[i] <= 0.0) return std::numeric_limits<double>::infinity();
            f -= y[i] * std::log(z[i]);
        }
        f += lambda * (z[i] - x0[i]) * (z[i] - x0[i]);
    }
    return f;
}

// Projected gradient on the simplex with backtracking, from the uniform
// point, run to a 1e-12 stall. Steps that land on the log barrier are
// rejected by the line search.
inline std::vector<double> simplex_entropy_long_run(const std::vector<double>& x0,
                                                    const std::vector<double>& y, double lambda) {
    const std::size_t p = x0.size();
    std::vector<double> z(p, 1.0 / static_cast<double>(p));
    double f = simplex_entropy_objective(z, x0, y, lambda);
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> grad(p);
        for (std::size_t i = 0; i < p; ++i) {
            grad[i] = 2.0 * lambda * (z[i] - x0[i]);
            if (y[i] != 0.0) grad[i] -= y[i] / z[i];
        }
        double step = 1.0;
        std::vector<double> best;
        double moved = 0.0;
        while (true) {
            std::vector<double> cand(p);
            for (std::size_t i = 0; i < p; ++i) cand[i] = z[i] - step * grad[i];
            cand = project_simplex(std::move(cand));
            const double fc = simplex_entropy_objective(cand, x0, y, lambda);
            if (fc <= f) {
                moved = 0.0;
                for (std::size_t i = 0; i < p; ++i)
                    moved = std::max(moved, std::abs(cand[i] - z[i]));
                best = std::move(cand);
                f = fc;
                break;
            }
            step *= 0.5;
            if (step < 1e-18) return z;
        }
        z = std::move(best);
        if (moved <= 1e-13) break;
    }
    return z;
}

// Naive per-sample ReLU recursion, scalar loops only.
inline std::vector<DenseMatrix> recursion_oracle(const DenseMatrix& u0, const DenseMatrix& w,
                                                 const std::vector<double>& b0,
                                                 const std::vector<DenseMatrix>& x) {
    const std::size_t h = w.rows();
    std::vector<DenseMatrix> states;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const std::size_t m = x[j].rows();
        DenseMatrix cur(m, h);
        for (std::size_t s = 0; s < m; ++s) {
            for (std::size_t c = 0; c < h; ++c) {
                double v = b0[c];
                for (std::size_t f = 0; f < x[j].cols(); ++f) v += x[j](s, f) * u0(f, c);
                if (j > 0)
                    for (std::size_t k = 0; k < h; ++k) v += states[j - 1](s, k) * w(k, c);
                cur(s, c) = v > 0.0 ? v : 0.0;
            }
        }
        states.push_back(std::move(cur));
    }
    return states;
}

}  // namespace oracles
