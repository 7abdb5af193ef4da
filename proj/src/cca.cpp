#include "cumi/cca.hpp"

#include <algorithm>
#include <cmath>

#include "cumi/eig.hpp"

namespace cumi::synth {

namespace {

constexpr double kRidge = 1e-8;

DenseMatrix center_columns(const DenseMatrix& x) {
    DenseMatrix out = x;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
        mean /= static_cast<double>(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) -= mean;
    }
    return out;
}

DenseMatrix covariance(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c = matmul_tn(a, b);
    c.scale_in_place(1.0 / static_cast<double>(a.rows() - 1));
    return c;
}

DenseMatrix inverse_sqrt(DenseMatrix s) {
    for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += kRidge;
    const EigenPair e = sym_eig(s);
    for (double l : e.values)
        if (!(l > 0.0))
            throw NumericError("linear_cca: covariance is singular beyond ridge repair");
    DenseMatrix scaled = e.vectors;
    for (std::size_t c = 0; c < scaled.cols(); ++c) {
        const double inv = 1.0 / std::sqrt(e.values[c]);
        for (std::size_t r = 0; r < scaled.rows(); ++r) scaled(r, c) *= inv;
    }
    return matmul_nt(scaled, e.vectors);
}

}  // namespace

CcaResult linear_cca(const DenseMatrix& x, const DenseMatrix& y, std::size_t k) {
    if (x.rows() != y.rows()) throw DimensionError("linear_cca: sample counts differ");
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    const std::size_t q = y.cols();
    if (n <= std::max(p, q))
        throw ContractError("linear_cca: need more samples than features");
    if (k < 1 || k > std::min(p, q))
        throw ContractError("linear_cca: k must lie in [1, min(p,q)]");

    const DenseMatrix xc = center_columns(x);
    const DenseMatrix yc = center_columns(y);
    const DenseMatrix wx = inverse_sqrt(covariance(xc, xc));
    const DenseMatrix wy = inverse_sqrt(covariance(yc, yc));
    const DenseMatrix m = matmul(matmul(wx, covariance(xc, yc)), wy);  // p×q

    // Singular structure of m through the symmetric eigenproblem of mᵀm.
    const EigenPair e = sym_eig(matmul_tn(m, m));

    CcaResult out;
    DenseMatrix a(p, k), b(q, k);
    for (std::size_t j = 0; j < k; ++j) {
        const double rho = std::sqrt(std::max(e.values[j], 0.0));
        out.correlations.push_back(std::min(rho, 1.0));
        // y-side direction.
        DenseMatrix v(q, 1);
        for (std::size_t r = 0; r < q; ++r) v(r, 0) = e.vectors(r, j);
        const DenseMatrix bj = matmul(wy, v);
        // x-side direction via u = m·v/ρ.
        DenseMatrix u = matmul(m, v);
        if (rho > 1e-12) u.scale_in_place(1.0 / rho);
        const DenseMatrix aj = matmul(wx, u);
        for (std::size_t r = 0; r < q; ++r) b(r, j) = bj(r, 0);
        for (std::size_t r = 0; r < p; ++r) a(r, j) = aj(r, 0);
    }
    out.x_proj = matmul(xc, a);
    out.y_proj = matmul(yc, b);
    return out;
}

}  // namespace cumi::synth
