#pragma once

#include <vector>

#include "cumi/matrix.hpp"

namespace cumi::synth {

struct CcaResult {
    DenseMatrix x_proj;                 // N×k canonical variates of x
    DenseMatrix y_proj;                 // N×k canonical variates of y
    std::vector<double> correlations;   // descending, in [0,1]
};

// Classical linear CCA via whitened cross-covariance: the canonical
// correlations are the singular values of Sxx^(-1/2)·Sxy·Syy^(-1/2), with
// ridge 1e-8 on both covariance blocks. Requires N > max(p,q) and
// k <= min(p,q).
CcaResult linear_cca(const DenseMatrix& x, const DenseMatrix& y, std::size_t k);

}  // namespace cumi::synth
