#include "liftseq/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace liftseq {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionMismatch("DenseMatrix: data length " + std::to_string(data_.size()) +
                                " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    if (!all_finite()) {
        throw std::invalid_argument("DenseMatrix: non-finite entry");
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
    if (!a.same_shape(b)) throw DimensionMismatch(std::string(what) + ": shape mismatch");
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dims differ");
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c.data() + i * m;
        const double* ai = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
        }
    }
    return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionMismatch("matmul_at_b: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t p = 0; p < n; ++p) {
        const double* ap = a.data() + p * k;
        const double* bp = b.data() + p * m;
        for (std::size_t i = 0; i < k; ++i) {
            const double api = ap[i];
            if (api == 0.0) continue;
            double* ci = c.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += api * bp[j];
        }
    }
    return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw DimensionMismatch("matmul_a_bt: col counts differ");
    DenseMatrix c(a.rows(), b.rows());
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * k;
        double* ci = c.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double* bj = b.data() + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator+");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] += b.raw()[i];
    return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator-");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] -= b.raw()[i];
    return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
    DenseMatrix c = a;
    for (double& v : c.raw()) v *= s;
    return c;
}

DenseMatrix& operator+=(DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator+=");
    for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] += b.raw()[i];
    return a;
}

DenseMatrix& operator-=(DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator-=");
    for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] -= b.raw()[i];
    return a;
}

void axpy(DenseMatrix& a, double s, const DenseMatrix& b) {
    require_same_shape(a, b, "axpy");
    for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] += s * b.raw()[i];
}

void add_row_vector(DenseMatrix& a, const std::vector<double>& b) {
    if (b.size() != a.cols()) throw DimensionMismatch("add_row_vector: length mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += b[j];
}

double frobenius_sq(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.raw()) s += v * v;
    return s;
}

double max_abs(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.raw()) s = std::max(s, std::abs(v));
    return s;
}

double dot(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.raw()[i] * b.raw()[i];
    return s;
}

DenseMatrix relu(const DenseMatrix& a) {
    DenseMatrix c = a;
    clamp_nonneg(c);
    return c;
}

void clamp_nonneg(DenseMatrix& a) {
    for (double& v : a.raw())
        if (v < 0.0) v = 0.0;
}

bool cholesky_solve(DenseMatrix m, const DenseMatrix& b, DenseMatrix& x) {
    const std::size_t n = m.rows();
    if (m.cols() != n || b.rows() != n) throw DimensionMismatch("cholesky_solve: shapes");
    // In-place lower Cholesky.
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= m(j, k) * m(j, k);
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        m(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= m(i, k) * m(j, k);
            m(i, j) = s / ljj;
        }
    }
    // Forward then backward substitution, one RHS column at a time.
    x = b;
    const std::size_t nc = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = m(i, k);
            for (std::size_t c = 0; c < nc; ++c) x(i, c) -= lik * x(k, c);
        }
        for (std::size_t c = 0; c < nc; ++c) x(i, c) /= m(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double lki = m(k, ii);
            for (std::size_t c = 0; c < nc; ++c) x(ii, c) -= lki * x(k, c);
        }
        for (std::size_t c = 0; c < nc; ++c) x(ii, c) /= m(ii, ii);
    }
    return true;
}

}  // namespace liftseq
