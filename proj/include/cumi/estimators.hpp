#pragma once

#include <span>
#include <vector>

#include "cumi/matrix.hpp"
#include "cumi/tape.hpp"

namespace cumi::info {

// Trace-normalized symmetric PSD kernel matrix.
struct NormalizedGram {
    DenseMatrix a;
    std::size_t n = 0;
};

// Validates symmetry (1e-10), unit trace (1e-10) and eigenvalue
// nonnegativity up to -1e-10.
NormalizedGram make_normalized_gram(DenseMatrix a);

enum class BandwidthMode { kMedian, kFixed };

struct KernelConfig {
    BandwidthMode bandwidth_mode = BandwidthMode::kMedian;
    double sigma = 1.0;  // used when fixed
    double alpha = 1.01;
};

void validate_alpha(double alpha);          // ContractError when invalid
void validate_kernel_config(const KernelConfig& cfg);

// Median of the N(N-1)/2 pairwise Euclidean distances of the rows of x;
// falls back to 1.0 when the median is zero. ContractError for N < 2.
double median_bandwidth(const DenseMatrix& x);

double resolve_bandwidth(const KernelConfig& cfg, const DenseMatrix& x);

// A(m,n) = exp(-|x_m-x_n|²/(2σ²)) / N  — unit trace by construction.
NormalizedGram gaussian_gram(const DenseMatrix& x, double sigma);

// Matrix-based alpha-order entropy over the clamped eigenspectrum, in bits:
// log2(Σ λ^α) / (1−α).
double renyi_entropy(const NormalizedGram& a, double alpha);

// Entropy of the renormalized Hadamard product of the grams.
double joint_entropy(std::span<const NormalizedGram> grams, double alpha);

// Σ marginal entropies − joint entropy, in bits.
double total_correlation(std::span<const NormalizedGram> grams, double alpha);

// Biased centered HSIC: tr(Kx·H·Ky·H)/(N-1)² with unnormalized Gaussian
// grams (unit diagonal) and H = I − J/N. Evaluation-only, never trained.
double hsic(const DenseMatrix& x, const DenseMatrix& y, double sigma_x, double sigma_y);

// Differentiable route (same quantities built from tape primitives).
NodeId renyi_entropy_node(Tape& t, NodeId gram, double alpha);
NodeId joint_gram_node(Tape& t, std::span<const NodeId> grams);
NodeId total_correlation_node(Tape& t, std::span<const NodeId> grams, double alpha);

}  // namespace cumi::info
