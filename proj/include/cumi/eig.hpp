#pragma once

#include <vector>

#include "cumi/matrix.hpp"

namespace cumi {

struct EigenPair {
    std::vector<double> values;  // descending
    DenseMatrix vectors;         // orthonormal columns, vectors.col(k) <-> values[k]
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. The input is
// symmetrized as (A+Aᵀ)/2 first; convergence requires the off-diagonal
// Frobenius norm to drop to 1e-12 within 100 sweeps, else NumericError.
// Deterministic: fixed sweep order, eigenvalues sorted descending, the first
// nonzero component of every eigenvector made positive.
EigenPair sym_eig(const DenseMatrix& a);

}  // namespace cumi
