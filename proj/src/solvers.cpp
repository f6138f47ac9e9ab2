#include "liftseq/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace liftseq {

namespace {

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double sigma_max_power(const DenseMatrix& g, std::size_t iters) {
    const std::size_t n = g.rows();
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> w(n, 0.0);
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += g(i, j) * v[j];
            w[i] = s;
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    // Rayleigh quotient at the final direction.
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g(i, j) * v[j];
        num += v[i] * s;
    }
    return num;
}

}  // namespace

DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b, double lambda,
                        const std::vector<double>& reg_diag) {
    if (a.rows() != b.rows()) throw DimensionMismatch("ridge_solve: A and B row counts differ");
    if (reg_diag.size() != a.cols()) throw DimensionMismatch("ridge_solve: reg_diag length");
    if (!(lambda > 0.0)) throw std::invalid_argument("ridge_solve: lambda must be positive");

    const std::size_t d = a.cols();
    DenseMatrix normal = matmul_at_b(a, a);
    for (double& v : normal.raw()) v *= lambda;
    for (std::size_t i = 0; i < d; ++i) normal(i, i) += reg_diag[i];

    DenseMatrix rhs = matmul_at_b(a, b);
    for (double& v : rhs.raw()) v *= lambda;

    DenseMatrix theta;
    if (cholesky_solve(normal, rhs, theta)) return theta;

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += normal(i, i);
    const double jitter = 1e-10 * trace / static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) normal(i, i) += jitter;
    if (cholesky_solve(normal, rhs, theta)) return theta;
    throw SingularSystem("ridge_solve: normal equations singular even with jitter");
}

NnlsResult nnls_solve(const std::vector<WeightedFactorTerm>& terms, DenseMatrix init,
                      std::size_t max_iters, double tol) {
    const std::size_t m = init.rows();
    const std::size_t h = init.cols();
    for (const auto& t : terms) {
        if (t.right_factor.rows() != h) throw DimensionMismatch("nnls_solve: R rows != h");
        if (t.target.rows() != m) throw DimensionMismatch("nnls_solve: T rows != m");
        if (t.target.cols() != t.right_factor.cols())
            throw DimensionMismatch("nnls_solve: T cols != R cols");
        if (!(t.weight > 0.0)) throw std::invalid_argument("nnls_solve: weight must be positive");
    }

    double lipschitz = 0.0;
    for (const auto& t : terms) {
        DenseMatrix gram = matmul_a_bt(t.right_factor, t.right_factor);
        lipschitz += 2.0 * t.weight * sigma_max_power(gram, 50);
    }
    const double step = lipschitz > 0.0 ? 1.0 / lipschitz : 0.0;

    // Collapse the term list once: grad = 2 * (H * G - B) with
    // G = sum_k w_k R_k R_k^T and B = sum_k w_k T_k R_k^T, algebraically
    // identical to the term-wise sum but one small matmul per iteration
    // and no per-iteration allocation.
    DenseMatrix gram_sum(h, h), lin(m, h);
    for (const auto& t : terms) {
        axpy(gram_sum, t.weight, matmul_a_bt(t.right_factor, t.right_factor));
        axpy(lin, t.weight, matmul_a_bt(t.target, t.right_factor));
    }

    DenseMatrix iterate = std::move(init);
    clamp_nonneg(iterate);

    NnlsResult result;
    DenseMatrix grad(m, h);
    for (std::size_t it = 0; it <= max_iters; ++it) {
        {
            const std::size_t k = h;
            for (std::size_t i = 0; i < m; ++i) {
                double* gi = grad.data() + i * h;
                const double* xi = iterate.data() + i * h;
                const double* bi = lin.data() + i * h;
                for (std::size_t j = 0; j < h; ++j) gi[j] = -2.0 * bi[j];
                for (std::size_t p = 0; p < k; ++p) {
                    const double xip = 2.0 * xi[p];
                    const double* gp = gram_sum.data() + p * h;
                    for (std::size_t j = 0; j < h; ++j) gi[j] += xip * gp[j];
                }
            }
        }
        if (!grad.all_finite() || !iterate.all_finite())
            throw NonFiniteIterate("nnls_solve: non-finite iterate");

        double kkt = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i)
            kkt = std::max(kkt, std::abs(std::min(iterate.raw()[i], grad.raw()[i])));
        if (kkt <= tol * (1.0 + max_abs(grad))) {
            result.converged = true;
            result.iters = it;
            break;
        }
        if (it == max_iters) {
            result.iters = it;
            break;
        }
        axpy(iterate, -step, grad);
        clamp_nonneg(iterate);
    }
    result.h = std::move(iterate);
    return result;
}

SimplexEntropyProblem SimplexEntropyProblem::make(std::vector<double> x0, std::vector<double> y,
                                                  double lambda) {
    if (x0.size() != y.size() || x0.empty())
        throw DimensionMismatch("simplex_entropy: anchor/label length mismatch");
    if (!(lambda > 0.0)) throw std::invalid_argument("simplex_entropy: lambda must be positive");
    std::size_t ones = 0;
    for (double v : y) {
        if (v == 1.0)
            ++ones;
        else if (v != 0.0)
            throw std::invalid_argument("simplex_entropy: label not 0/1");
    }
    if (ones != 1) throw std::invalid_argument("simplex_entropy: label not one-hot");

    SimplexEntropyProblem prob;
    prob.lambda = lambda;
    const std::size_t p = x0.size();

    // theta from the feasible point z0 uniform over the support of y
    // (a single coordinate here, so z0 is the indicator).
    double theta = 0.0;
    double sum_x0 = 0.0;
    double sum_y = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        const double z0 = y[i];  // 1/k with k = 1
        theta += lambda * (z0 - x0[i]) * (z0 - x0[i]);
        sum_x0 += x0[i];
        sum_y += y[i];
    }
    prob.theta = theta;
    prob.z_min = std::exp(-theta);
    prob.nu_lo =
        (1.0 - sum_x0 - (sum_y / (2.0 * lambda)) * std::exp(theta)) / static_cast<double>(p);
    if (!std::isfinite(prob.nu_lo))  // e^theta overflowed; the bound is vacuous
        prob.nu_lo = std::numeric_limits<double>::lowest();
    // The derivation of nu_lo above sums the interior stationarity
    // condition over every coordinate, which breaks once an unlabeled
    // coordinate clamps to zero (z_i = 0 > x0_i + nu is possible). Take
    // the minimum with an exact bound that holds in the clamped regime:
    // at nu <= -x0_i every unlabeled coordinate vanishes, and the
    // labeled coordinate alone stays <= 1 for nu <= 1 - x0_i - y_i/(2l),
    // so the simplex mass at that nu is <= 1.
    double lo_clamped = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p; ++i)
        lo_clamped = std::min(lo_clamped, y[i] == 0.0 ? -x0[i]
                                                      : 1.0 - x0[i] - y[i] / (2.0 * lambda));
    prob.nu_lo = std::min(prob.nu_lo, lo_clamped);
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p; ++i) hi = std::max(hi, x0[i] + y[i] / (2.0 * lambda));
    prob.nu_hi = 1.0 - hi;
    // Rounding in the two independent bound computations can leave the
    // endpoints out of order by an ulp when the root sits exactly on one.
    prob.nu_lo = std::min(prob.nu_lo, prob.nu_hi);

    prob.anchor = std::move(x0);
    prob.label = std::move(y);
    return prob;
}

namespace {

// z_i(nu) for the simplex-entropy prox; exact max(0, x0_i + nu) when y_i = 0.
// The conjugate form c / (sqrt(a^2+c) - a) is used for a < 0: the naive
// a + sqrt(a^2+c) cancels catastrophically (and overflows to +inf) when
// the theta-based lower bound puts nu at a huge negative value.
inline double prox_coord(double x0i, double yi, double inv2lambda, double nu) {
    const double a = 0.5 * (x0i + nu);
    const double c = yi * inv2lambda;
    if (a > 0.0) return a + std::sqrt(a * a + c);
    if (c == 0.0) return 0.0;
    return c / (std::sqrt(a * a + c) - a);
}

}  // namespace

std::vector<double> simplex_entropy_prox(const SimplexEntropyProblem& prob, double tol) {
    const std::size_t p = prob.anchor.size();
    const double inv2lambda = 1.0 / (2.0 * prob.lambda);

    auto eval = [&](double nu, std::vector<double>& z) {
        double sum = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            z[i] = prox_coord(prob.anchor[i], prob.label[i], inv2lambda, nu);
            sum += z[i];
        }
        return sum - 1.0;
    };

    std::vector<double> z(p);
    double lo = prob.nu_lo, hi = prob.nu_hi;
    double glo = eval(lo, z);
    if (std::abs(glo) <= tol) return z;
    double ghi = eval(hi, z);
    if (std::abs(ghi) <= tol) return z;
    if (glo > 0.0 || ghi < 0.0)
        throw BracketFailure("simplex_entropy_prox: no sign change over the dual bracket");

    // The theta-based lower bound can sit astronomically far below the
    // root when theta is large (e^theta), so the cap must cover halving
    // from ~1e300 down to ulp resolution.
    for (int it = 0; it < 2200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = eval(mid, z);
        if (std::abs(g) <= tol) return z;
        if (g < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    // 1'z(nu) is strictly increasing, so the halvings land within tol;
    // reaching here means the tolerance is below representable resolution.
    return z;
}

DenseMatrix simplex_entropy_prox_batch(const DenseMatrix& x0, const DenseMatrix& y, double lambda,
                                       double tol) {
    if (!x0.same_shape(y)) throw DimensionMismatch("simplex_entropy_prox_batch: shape mismatch");
    const std::size_t p = x0.rows(), m = x0.cols();
    const double inv2lambda = 1.0 / (2.0 * lambda);

    // Per-column duals tracked as vectors and bisected simultaneously.
    std::vector<double> lo(m), hi(m);
    std::vector<char> done(m, 0);
    DenseMatrix z(p, m);

    std::vector<double> col_x0(p), col_y(p);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < p; ++i) {
            col_x0[i] = x0(i, j);
            col_y[i] = y(i, j);
        }
        const auto prob = SimplexEntropyProblem::make(col_x0, col_y, lambda);
        lo[j] = prob.nu_lo;
        hi[j] = prob.nu_hi;
    }

    auto eval_col = [&](std::size_t j, double nu) {
        double sum = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            z(i, j) = prox_coord(x0(i, j), y(i, j), inv2lambda, nu);
            sum += z(i, j);
        }
        return sum - 1.0;
    };

    for (std::size_t j = 0; j < m; ++j) {
        const double glo = eval_col(j, lo[j]);
        if (std::abs(glo) <= tol) {
            done[j] = 1;
            continue;
        }
        const double ghi = eval_col(j, hi[j]);
        if (std::abs(ghi) <= tol) {
            done[j] = 1;
            continue;
        }
        if (glo > 0.0 || ghi < 0.0)
            throw BracketFailure("simplex_entropy_prox_batch: column " + std::to_string(j) +
                                 ": no sign change over the dual bracket");
    }

    for (int it = 0; it < 2200; ++it) {
        bool any = false;
        for (std::size_t j = 0; j < m; ++j) {
            if (done[j]) continue;
            const double mid = 0.5 * (lo[j] + hi[j]);
            const double g = eval_col(j, mid);
            if (std::abs(g) <= tol) {
                done[j] = 1;
                continue;
            }
            any = true;
            if (g < 0.0)
                lo[j] = mid;
            else
                hi[j] = mid;
        }
        if (!any) break;
    }
    return z;
}

DenseMatrix softmax_rows(const DenseMatrix& m) {
    DenseMatrix p(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double rowmax = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m.cols(); ++j) rowmax = std::max(rowmax, m(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            p(i, j) = std::exp(m(i, j) - rowmax);
            sum += p(i, j);
        }
        for (std::size_t j = 0; j < m.cols(); ++j) p(i, j) /= sum;
    }
    return p;
}

namespace {

// Cross-entropy sum -Tr(Y' log softmax_rows(S)) via log-sum-exp.
double cross_entropy(const DenseMatrix& scores, const DenseMatrix& y) {
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

}  // namespace

MultinomialResult multinomial_fit(const std::vector<DenseMatrix>& h_list,
                                  const std::vector<DenseMatrix>& y_list, double rho1,
                                  DenseMatrix u1_init, std::vector<double> b1_init,
                                  std::size_t max_iters, double tol) {
    if (h_list.size() != y_list.size())
        throw DimensionMismatch("multinomial_fit: list lengths differ");
    const std::size_t h = u1_init.rows(), o = u1_init.cols();
    for (std::size_t j = 0; j < h_list.size(); ++j) {
        if (h_list[j].cols() != h || y_list[j].cols() != o ||
            h_list[j].rows() != y_list[j].rows())
            throw DimensionMismatch("multinomial_fit: inconsistent shapes at timestep " +
                                    std::to_string(j));
    }

    DenseMatrix u1 = std::move(u1_init);
    std::vector<double> b1 = std::move(b1_init);

    auto objective = [&](const DenseMatrix& u, const std::vector<double>& b) {
        double f = rho1 * frobenius_sq(u);
        for (std::size_t j = 0; j < h_list.size(); ++j) {
            DenseMatrix scores = matmul(h_list[j], u);
            add_row_vector(scores, b);
            f += cross_entropy(scores, y_list[j]);
        }
        return f;
    };

    MultinomialResult result;
    double f = objective(u1, b1);
    DenseMatrix gu(h, o);
    std::vector<double> gb(o);

    for (std::size_t it = 0; it <= max_iters; ++it) {
        for (double& v : gu.raw()) v = 0.0;
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t j = 0; j < h_list.size(); ++j) {
            DenseMatrix scores = matmul(h_list[j], u1);
            add_row_vector(scores, b1);
            DenseMatrix diff = softmax_rows(scores);
            diff -= y_list[j];
            gu += matmul_at_b(h_list[j], diff);
            for (std::size_t r = 0; r < diff.rows(); ++r)
                for (std::size_t c = 0; c < o; ++c) gb[c] += diff(r, c);
        }
        axpy(gu, 2.0 * rho1, u1);

        double gmax = max_abs(gu);
        for (double v : gb) gmax = std::max(gmax, std::abs(v));
        if (gmax <= tol * (1.0 + std::abs(f))) {
            result.converged = true;
            result.iters = it;
            break;
        }
        if (it == max_iters) {
            result.iters = it;
            break;
        }

        double gnorm_sq = frobenius_sq(gu);
        for (double v : gb) gnorm_sq += v * v;

        double step = 1.0;
        DenseMatrix u_try;
        std::vector<double> b_try;
        while (true) {
            u_try = u1;
            axpy(u_try, -step, gu);
            b_try = b1;
            for (std::size_t c = 0; c < o; ++c) b_try[c] -= step * gb[c];
            const double f_try = objective(u_try, b_try);
            if (f_try <= f - 1e-4 * step * gnorm_sq) {
                f = f_try;
                break;
            }
            step *= 0.5;
            if (step < 1e-16) throw LineSearchStall("multinomial_fit: line search stalled");
        }
        u1 = std::move(u_try);
        b1 = std::move(b_try);
    }

    result.u1 = std::move(u1);
    result.b1 = std::move(b1);
    return result;
}

}  // namespace liftseq
