#pragma once

#include <cstddef>
#include <vector>

#include "liftseq/errors.hpp"

namespace liftseq {

/// Row-major dense matrix of doubles. The one carrier type for data
/// slices, hidden states and weights.
class DenseMatrix {
public:
    DenseMatrix() = default;

    // Zero-filled.
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    // Takes ownership of row-major data; rejects size mismatch and
    // non-finite entries.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool all_finite() const;
    bool same_shape(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

DenseMatrix& operator+=(DenseMatrix& a, const DenseMatrix& b);
DenseMatrix& operator-=(DenseMatrix& a, const DenseMatrix& b);

// a += s * b
void axpy(DenseMatrix& a, double s, const DenseMatrix& b);

// Adds the row vector b (length = cols) to every row of a.
void add_row_vector(DenseMatrix& a, const std::vector<double>& b);

double frobenius_sq(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double dot(const DenseMatrix& a, const DenseMatrix& b);

// Entrywise max(0, .)
DenseMatrix relu(const DenseMatrix& a);
void clamp_nonneg(DenseMatrix& a);

// Solves the symmetric positive-definite system M * X = B in place of X
// via Cholesky. Returns false if a non-positive pivot is met.
bool cholesky_solve(DenseMatrix m, const DenseMatrix& b, DenseMatrix& x);

}  // namespace liftseq
