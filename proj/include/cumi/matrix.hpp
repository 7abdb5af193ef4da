#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "cumi/common.hpp"

namespace cumi {

// Row-major double-precision matrix; the single numeric carrier for data,
// parameters, latents and Gram matrices.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    DenseMatrix(std::size_t rows, std::size_t cols, double fill)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    double* row(std::size_t r) noexcept { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const noexcept { return data_.data() + r * cols_; }

    bool same_shape(const DenseMatrix& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

    DenseMatrix transpose() const;
    double trace() const;           // DimensionError when not square
    double sum() const;
    double frobenius_norm() const;
    bool all_finite() const;

    void fill(double v);
    void scale_in_place(double s);
    void add_in_place(const DenseMatrix& o);
    void axpy_in_place(double alpha, const DenseMatrix& x);  // this += alpha*x

    bool operator==(const DenseMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);     // a·b
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a·bᵀ
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // aᵀ·b
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);

// Largest |difference| over all entries; DimensionError on shape mismatch.
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* where);
void require_finite(const DenseMatrix& a, const char* where);

}  // namespace cumi
