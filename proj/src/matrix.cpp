#include "cumi/matrix.hpp"

#include <cmath>
#include <string>

#include "cumi/kernels.hpp"

namespace cumi {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    DenseMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("from_rows: ragged row lengths");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::trace() const {
    if (rows_ != cols_) throw DimensionError("trace: matrix is not square");
    double acc = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) acc += (*this)(i, i);
    return acc;
}

double DenseMatrix::sum() const { return kern::sum(data(), size()); }

double DenseMatrix::frobenius_norm() const {
    return std::sqrt(kern::dot(data(), data(), size()));
}

bool DenseMatrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void DenseMatrix::fill(double v) { data_.assign(data_.size(), v); }

void DenseMatrix::scale_in_place(double s) { kern::scale(data(), s, data(), size()); }

void DenseMatrix::add_in_place(const DenseMatrix& o) {
    require_same_shape(*this, o, "add_in_place");
    kern::add(data(), o.data(), data(), size());
}

void DenseMatrix::axpy_in_place(double alpha, const DenseMatrix& x) {
    require_same_shape(*this, x, "axpy_in_place");
    kern::axpy(alpha, x.data(), data(), size());
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* where) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(where) + ": shape mismatch " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

void require_finite(const DenseMatrix& a, const char* where) {
    if (!a.all_finite())
        throw NumericError(std::string(where) + ": non-finite entries");
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            kern::axpy(a(i, k), b.row(k), crow, b.cols());
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw DimensionError("matmul_nt: inner dimensions differ");
    DenseMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            c(i, j) = kern::dot(a.row(i), b.row(j), a.cols());
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("matmul_tn: inner dimensions differ");
    DenseMatrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* brow = b.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            kern::axpy(a(i, k), brow, c.row(k), b.cols());
        }
    }
    return c;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "add");
    DenseMatrix c(a.rows(), a.cols());
    kern::add(a.data(), b.data(), c.data(), c.size());
    return c;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "sub");
    DenseMatrix c(a.rows(), a.cols());
    kern::sub(a.data(), b.data(), c.data(), c.size());
    return c;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "hadamard");
    DenseMatrix c(a.rows(), a.cols());
    kern::mul(a.data(), b.data(), c.data(), c.size());
    return c;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
    DenseMatrix c(a.rows(), a.cols());
    kern::scale(a.data(), s, c.data(), c.size());
    return c;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::fabs(a.data()[i] - b.data()[i]);
        if (d > m) m = d;
    }
    return m;
}

}  // namespace cumi
