#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "liftseq/matrix.hpp"

namespace liftseq {

/// One additive term w * ||H * R - T||_F^2 of a non-negative
/// least-squares objective in the unknown H (m x h). R = I encodes
/// plain penalty terms, R = W encodes forward coupling through the
/// recurrence.
struct WeightedFactorTerm {
    DenseMatrix right_factor;  // h x q
    DenseMatrix target;        // m x q
    double weight = 1.0;
};

/// Minimizer of lambda * ||A*Theta - B||_F^2 + sum_i reg_diag[i] * ||Theta[i,:]||^2,
/// via the SPD normal equations and Cholesky. On a failed factorization
/// retries once with 1e-10 * trace/d jitter on the diagonal, then
/// throws SingularSystem.
DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b, double lambda,
                        const std::vector<double>& reg_diag);

struct NnlsResult {
    DenseMatrix h;
    bool converged = false;
    std::size_t iters = 0;
};

/// Projected gradient descent for min_{H >= 0} sum_k w_k * ||H*R_k - T_k||_F^2
/// with step 1/L, L = 2 * sum_k w_k * sigma_max(R_k R_k^T) estimated by
/// 50 power iterations. Stops on the KKT residual
/// ||min(H, grad)||_inf <= tol * (1 + ||grad||_inf).
NnlsResult nnls_solve(const std::vector<WeightedFactorTerm>& terms, DenseMatrix init,
                      std::size_t max_iters, double tol);

/// Single-column instance of the simplex-entropy proximal problem
///   min_z -sum_i y_i log z_i + lambda * ||z - x0||^2  s.t. z >= 0, 1'z = 1
/// with the dual bracket and feasibility bound precomputed from the
/// inputs.
struct SimplexEntropyProblem {
    std::vector<double> anchor;  // x0
    std::vector<double> label;   // one-hot y
    double lambda = 1.0;
    double nu_lo = 0.0;
    double nu_hi = 0.0;
    double theta = 0.0;
    double z_min = 0.0;  // e^{-theta}

    static SimplexEntropyProblem make(std::vector<double> x0, std::vector<double> y,
                                      double lambda);
};

/// Bisection on the dual variable nu until |1'z - 1| <= tol.
std::vector<double> simplex_entropy_prox(const SimplexEntropyProblem& prob, double tol);

/// Column-parallel variant: column j of the result solves the problem
/// with anchor X0[:,j] and label Y[:,j]; the per-column duals are kept
/// as a vector and bisected simultaneously.
DenseMatrix simplex_entropy_prox_batch(const DenseMatrix& x0, const DenseMatrix& y,
                                       double lambda, double tol);

/// Row-wise softmax with max-shift; every row sums to 1.
DenseMatrix softmax_rows(const DenseMatrix& m);

struct MultinomialResult {
    DenseMatrix u1;          // h x o
    std::vector<double> b1;  // o
    bool converged = false;
    std::size_t iters = 0;
};

/// Full-batch gradient descent with Armijo backtracking for
///   min sum_j -Tr(Y_j' log softmax_rows(H_j*U1 + 1*b1')) + rho1 * ||U1||_F^2.
MultinomialResult multinomial_fit(const std::vector<DenseMatrix>& h_list,
                                  const std::vector<DenseMatrix>& y_list, double rho1,
                                  DenseMatrix u1_init, std::vector<double> b1_init,
                                  std::size_t max_iters, double tol);

}  // namespace liftseq
