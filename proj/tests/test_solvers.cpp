#include <doctest.h>

#include <cmath>

#include "liftseq/rng.hpp"
#include "liftseq/solvers.hpp"
#include "oracles.hpp"

using namespace liftseq;

TEST_CASE("ridge_solve identity system") {
    const DenseMatrix theta =
        ridge_solve(DenseMatrix::identity(2), DenseMatrix::identity(2), 1.0, {0.0, 0.0});
    CHECK(theta(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(theta(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(theta(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ridge_solve scalar normal equation (2+2)theta = 4") {
    const DenseMatrix a(2, 1, {1.0, 1.0});
    const DenseMatrix b(2, 1, {2.0, 2.0});
    const DenseMatrix theta = ridge_solve(a, b, 1.0, {2.0});
    CHECK(theta(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ridge_solve matches the explicit-inverse oracle") {
    Rng rng(42);
    DenseMatrix a(5, 3), b(5, 2);
    for (double& v : a.raw()) v = rng.normal();
    for (double& v : b.raw()) v = rng.normal();
    const std::vector<double> reg{0.1, 0.1, 0.0};
    const DenseMatrix theta = ridge_solve(a, b, 0.1, reg);
    const DenseMatrix expected = oracles::ridge_by_inverse(a, b, 0.1, reg);
    CHECK(max_abs(theta - expected) <= 1e-10);
}

TEST_CASE("ridge_solve rejects bad shapes") {
    CHECK_THROWS_AS(ridge_solve(DenseMatrix(3, 2), DenseMatrix(4, 1), 1.0, {0.0, 0.0}),
                    DimensionMismatch);
    CHECK_THROWS_AS(ridge_solve(DenseMatrix(3, 2), DenseMatrix(3, 1), 1.0, {0.0}),
                    DimensionMismatch);
}

TEST_CASE("ridge_solve singular fully-unregularized system errors") {
    // A zero design with zero regularization: the normal matrix is zero,
    // its trace-scaled jitter is zero too, so the retry cannot rescue it.
    CHECK_THROWS_AS(ridge_solve(DenseMatrix(2, 2), DenseMatrix(2, 2), 1.0, {0.0, 0.0}),
                    SingularSystem);
}

TEST_CASE("nnls_solve clamps a negative unconstrained optimum") {
    std::vector<WeightedFactorTerm> terms;
    terms.push_back({DenseMatrix::identity(1), DenseMatrix(1, 1, {-3.0}), 1.0});
    const auto res = nnls_solve(terms, DenseMatrix(1, 1), 100, 1e-10);
    CHECK(res.converged);
    CHECK(res.h(0, 0) == 0.0);
}

TEST_CASE("nnls_solve keeps a feasible unconstrained optimum") {
    std::vector<WeightedFactorTerm> terms;
    terms.push_back({DenseMatrix::identity(1), DenseMatrix(1, 1, {2.0}), 1.0});
    const auto res = nnls_solve(terms, DenseMatrix(1, 1), 500, 1e-12);
    CHECK(res.h(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("nnls_solve matches the long-run oracle on two random terms") {
    Rng rng(7);
    std::vector<WeightedFactorTerm> terms;
    for (int k = 0; k < 2; ++k) {
        DenseMatrix r(2, 4), t(3, 4);
        for (double& v : r.raw()) v = rng.normal();
        for (double& v : t.raw()) v = rng.normal();
        terms.push_back({std::move(r), std::move(t), k == 0 ? 1.0 : 0.3});
    }
    const auto res = nnls_solve(terms, DenseMatrix(3, 2), 20000, 1e-12);
    const DenseMatrix expected = oracles::nnls_long_run(terms, DenseMatrix(3, 2));
    CHECK(max_abs(res.h - expected) <= 1e-6);
}

TEST_CASE("nnls_solve output is non-negative with complementarity at convergence") {
    Rng rng(99);
    for (int inst = 0; inst < 20; ++inst) {
        std::vector<WeightedFactorTerm> terms;
        DenseMatrix r(3, 3), t(4, 3);
        for (double& v : r.raw()) v = rng.normal();
        // Diagonal boost keeps R away from singular: this test is about
        // complementarity at convergence, and the fixed-step rate on a
        // near-singular factor would need a hopeless iteration budget.
        for (std::size_t i = 0; i < 3; ++i) r(i, i) += 3.0;
        for (double& v : t.raw()) v = rng.normal();
        terms.push_back({std::move(r), std::move(t), 0.5 + rng.uniform()});
        const double tol = 1e-8;
        const auto res = nnls_solve(terms, DenseMatrix(4, 3), 200000, tol);
        REQUIRE(res.converged);

        DenseMatrix grad(4, 3);
        for (const auto& term : terms) {
            DenseMatrix resid = matmul(res.h, term.right_factor);
            resid -= term.target;
            axpy(grad, 2.0 * term.weight, matmul_a_bt(resid, term.right_factor));
        }
        const double gmax = max_abs(grad);
        for (std::size_t i = 0; i < res.h.size(); ++i) {
            CHECK(res.h.raw()[i] >= 0.0);
            if (res.h.raw()[i] > 1e-8)
                CHECK(std::abs(grad.raw()[i]) <= 10.0 * tol * (1.0 + gmax));
        }
    }
}

TEST_CASE("simplex_entropy_prox single coordinate forces z = 1, nu = 0") {
    const auto prob = SimplexEntropyProblem::make({0.0}, {1.0}, 0.5);
    CHECK(prob.nu_hi == doctest::Approx(0.0));
    CHECK(prob.nu_lo == doctest::Approx(1.0 - std::exp(0.5)));
    const auto z = simplex_entropy_prox(prob, 1e-10);
    REQUIRE(z.size() == 1);
    CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("simplex_entropy_prox matches the long-run simplex oracle") {
    SUBCASE("p = 2") {
        const std::vector<double> x0{0.5, -0.2}, y{1.0, 0.0};
        const auto z = simplex_entropy_prox(SimplexEntropyProblem::make(x0, y, 1.0), 1e-12);
        const auto expected = oracles::simplex_entropy_long_run(x0, y, 1.0);
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(z[i] - expected[i]) <= 1e-6);
    }
    SUBCASE("p = 3, large lambda") {
        const std::vector<double> x0{0.0, 0.0, 0.0}, y{0.0, 1.0, 0.0};
        const auto z = simplex_entropy_prox(SimplexEntropyProblem::make(x0, y, 10.0), 1e-12);
        const auto expected = oracles::simplex_entropy_long_run(x0, y, 10.0);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(z[i] - expected[i]) <= 1e-6);
    }
}

TEST_CASE("simplex_entropy_prox zero-label coordinates take the exact clamp form") {
    Rng rng(3);
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t p = 2 + rng.uniform_int(6);
        std::vector<double> x0(p), y(p, 0.0);
        for (double& v : x0) v = rng.normal();
        y[rng.uniform_int(p)] = 1.0;
        const double lambda = 0.1 + 2.0 * rng.uniform();
        const auto prob = SimplexEntropyProblem::make(x0, y, lambda);
        const auto z = simplex_entropy_prox(prob, 1e-12);

        // Recover nu from the labelled coordinate's closed form, then
        // check z_i = max(0, x0_i + nu) exactly on the y_i = 0 ones.
        double sum = 0.0;
        for (double v : z) sum += v;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (std::size_t i = 0; i < p; ++i) CHECK(z[i] >= 0.0);
    }
}

TEST_CASE("simplex_entropy_prox feasibility property over random instances") {
    Rng rng(17);
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t p = 1 + rng.uniform_int(10);
        std::vector<double> x0(p), y(p, 0.0);
        for (double& v : x0) v = 2.0 * rng.normal();
        y[rng.uniform_int(p)] = 1.0;
        const double lambda = std::exp(rng.uniform(-3.0, 3.0));
        const auto prob = SimplexEntropyProblem::make(x0, y, lambda);
        CHECK(prob.nu_lo <= prob.nu_hi);
        const auto z = simplex_entropy_prox(prob, 1e-10);
        double sum = 0.0;
        for (double v : z) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-10);
    }
}

TEST_CASE("simplex_entropy_prox_batch") {
    SUBCASE("batch of one equals the scalar operation") {
        const std::vector<double> x0{0.4, -0.1}, y{0.0, 1.0};
        const auto z = simplex_entropy_prox(SimplexEntropyProblem::make(x0, y, 0.7), 1e-10);
        const DenseMatrix zb = simplex_entropy_prox_batch(
            DenseMatrix(2, 1, {0.4, -0.1}), DenseMatrix(2, 1, {0.0, 1.0}), 0.7, 1e-10);
        CHECK(zb(0, 0) == z[0]);
        CHECK(zb(1, 0) == z[1]);
    }
    SUBCASE("duplicate columns give identical outputs") {
        DenseMatrix x0(3, 2), y(3, 2);
        x0(0, 0) = x0(0, 1) = 0.3;
        x0(1, 0) = x0(1, 1) = -0.6;
        x0(2, 0) = x0(2, 1) = 0.1;
        y(1, 0) = y(1, 1) = 1.0;
        const DenseMatrix z = simplex_entropy_prox_batch(x0, y, 1.3, 1e-10);
        for (std::size_t r = 0; r < 3; ++r) CHECK(z(r, 0) == z(r, 1));
    }
    SUBCASE("four random columns match the scalar operation") {
        Rng rng(5);
        DenseMatrix x0(4, 4), y(4, 4);
        for (double& v : x0.raw()) v = rng.normal();
        for (std::size_t c = 0; c < 4; ++c) y(rng.uniform_int(4), c) = 1.0;
        const DenseMatrix z = simplex_entropy_prox_batch(x0, y, 0.9, 1e-11);
        for (std::size_t c = 0; c < 4; ++c) {
            std::vector<double> col_x0(4), col_y(4);
            for (std::size_t r = 0; r < 4; ++r) {
                col_x0[r] = x0(r, c);
                col_y[r] = y(r, c);
            }
            const auto zc =
                simplex_entropy_prox(SimplexEntropyProblem::make(col_x0, col_y, 0.9), 1e-11);
            for (std::size_t r = 0; r < 4; ++r) CHECK(std::abs(z(r, c) - zc[r]) <= 1e-12);
        }
    }
}

TEST_CASE("softmax_rows") {
    SUBCASE("zeros give the uniform row") {
        const DenseMatrix p = softmax_rows(DenseMatrix(1, 4));
        for (std::size_t c = 0; c < 4; ++c) CHECK(p(0, c) == doctest::Approx(0.25));
    }
    SUBCASE("large entries do not overflow") {
        const DenseMatrix p = softmax_rows(DenseMatrix(1, 2, {1000.0, 0.0}));
        CHECK(p(0, 0) == doctest::Approx(1.0));
        CHECK(p(0, 1) <= 1e-300);
    }
    SUBCASE("direct arithmetic oracle for [1, 2]") {
        const DenseMatrix p = softmax_rows(DenseMatrix(1, 2, {1.0, 2.0}));
        const double denom = std::exp(1.0) + std::exp(2.0);
        CHECK(std::abs(p(0, 0) - std::exp(1.0) / denom) <= 1e-12);
        CHECK(std::abs(p(0, 1) - std::exp(2.0) / denom) <= 1e-12);
    }
    SUBCASE("rows sum to one and are shift invariant") {
        Rng rng(23);
        DenseMatrix m(5, 3);
        for (double& v : m.raw()) v = 3.0 * rng.normal();
        const DenseMatrix p = softmax_rows(m);
        DenseMatrix shifted = m;
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 3; ++c) shifted(r, c) += 7.5;
        const DenseMatrix p2 = softmax_rows(shifted);
        for (std::size_t r = 0; r < 5; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                sum += p(r, c);
                CHECK(std::abs(p(r, c) - p2(r, c)) <= 1e-12);
                CHECK(p(r, c) > 0.0);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("multinomial_fit zero features recover the class frequency in the bias") {
    DenseMatrix y(4, 2);
    y(0, 0) = y(1, 0) = y(2, 0) = 1.0;
    y(3, 1) = 1.0;
    const auto fit = multinomial_fit({DenseMatrix(4, 2)}, {y}, 0.1, DenseMatrix(2, 2),
                                     {0.0, 0.0}, 20000, 1e-10);
    CHECK(fit.converged);
    CHECK(max_abs(fit.u1) <= 1e-8);
    DenseMatrix bias_row(1, 2, {fit.b1[0], fit.b1[1]});
    const DenseMatrix p = softmax_rows(bias_row);
    CHECK(p(0, 0) == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(p(0, 1) == doctest::Approx(0.25).epsilon(1e-6));
}

namespace {

double multinomial_objective(const std::vector<DenseMatrix>& hs, const std::vector<DenseMatrix>& ys,
                             double rho1, const DenseMatrix& u1, const std::vector<double>& b1) {
    double f = rho1 * frobenius_sq(u1);
    for (std::size_t j = 0; j < hs.size(); ++j) {
        DenseMatrix scores = matmul(hs[j], u1);
        add_row_vector(scores, b1);
        const DenseMatrix p = softmax_rows(scores);
        for (std::size_t r = 0; r < p.rows(); ++r)
            for (std::size_t c = 0; c < p.cols(); ++c)
                if (ys[j](r, c) != 0.0) f -= ys[j](r, c) * std::log(p(r, c));
    }
    return f;
}

}  // namespace

TEST_CASE("multinomial_fit stationarity and oracle objective on a small instance") {
    Rng rng(31);
    DenseMatrix h(6, 2), y(6, 2);
    for (double& v : h.raw()) v = rng.normal();
    for (std::size_t r = 0; r < 6; ++r) y(r, r % 2) = 1.0;
    const double tol = 1e-9;
    const auto fit = multinomial_fit({h}, {y}, 0.05, DenseMatrix(2, 2), {0.0, 0.0}, 50000, tol);
    REQUIRE(fit.converged);

    // Stationarity contract at the returned point.
    DenseMatrix scores = matmul(h, fit.u1);
    add_row_vector(scores, fit.b1);
    DenseMatrix diff = softmax_rows(scores);
    diff -= y;
    DenseMatrix gu = matmul_at_b(h, diff);
    axpy(gu, 2.0 * 0.05, fit.u1);
    double gmax = max_abs(gu);
    for (std::size_t c = 0; c < 2; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < 6; ++r) s += diff(r, c);
        gmax = std::max(gmax, std::abs(s));
    }
    const double f = multinomial_objective({h}, {y}, 0.05, fit.u1, fit.b1);
    CHECK(gmax <= tol * (1.0 + std::abs(f)));

    // Independent oracle: random restarts plus long fixed-step descent.
    double best = std::numeric_limits<double>::infinity();
    Rng restart(77);
    for (int attempt = 0; attempt < 4; ++attempt) {
        DenseMatrix u(2, 2);
        std::vector<double> b(2, 0.0);
        if (attempt > 0)
            for (double& v : u.raw()) v = restart.normal();
        for (int it = 0; it < 200000; ++it) {
            DenseMatrix s2 = matmul(h, u);
            add_row_vector(s2, b);
            DenseMatrix d2 = softmax_rows(s2);
            d2 -= y;
            DenseMatrix g2 = matmul_at_b(h, d2);
            axpy(g2, 2.0 * 0.05, u);
            std::vector<double> gb(2, 0.0);
            for (std::size_t r = 0; r < 6; ++r)
                for (std::size_t c = 0; c < 2; ++c) gb[c] += d2(r, c);
            axpy(u, -0.01, g2);
            for (std::size_t c = 0; c < 2; ++c) b[c] -= 0.01 * gb[c];
        }
        best = std::min(best, multinomial_objective({h}, {y}, 0.05, u, b));
    }
    CHECK(f <= best + 1e-6);
    CHECK(std::abs(f - best) <= 1e-6);
}
