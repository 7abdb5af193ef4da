#include "cumi/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cumi/eig.hpp"
#include "cumi/kernels.hpp"

namespace cumi::info {

namespace {

double clamp_eigenvalue(double l) { return l < Tape::kEigenvalueFloor ? 0.0 : l; }

double entropy_from_eigenvalues(const std::vector<double>& values, double alpha) {
    double s = 0.0;
    for (double l : values) s += std::pow(clamp_eigenvalue(l), alpha);
    if (!(s > 0.0)) throw NumericError("renyi_entropy: eigenvalue power sum is not positive");
    return std::log2(s) / (1.0 - alpha);
}

}  // namespace

NormalizedGram make_normalized_gram(DenseMatrix a) {
    if (a.rows() != a.cols())
        throw DimensionError("normalized_gram: matrix is not square");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(a(i, j) - a(j, i)) > 1e-10)
                throw ContractError("normalized_gram: matrix is not symmetric");
    if (std::fabs(a.trace() - 1.0) > 1e-10)
        throw ContractError("normalized_gram: trace must be 1");
    return NormalizedGram{std::move(a), n};
}

void validate_alpha(double alpha) {
    if (!(alpha > 0.0) || alpha == 1.0)
        throw ContractError("alpha must lie in (0,1) or (1,inf); use 1.01 for "
                            "near-Shannon behavior");
}

void validate_kernel_config(const KernelConfig& cfg) {
    validate_alpha(cfg.alpha);
    if (cfg.bandwidth_mode == BandwidthMode::kFixed && !(cfg.sigma > 0.0))
        throw ContractError("fixed bandwidth must be positive");
}

double median_bandwidth(const DenseMatrix& x) {
    const std::size_t n = x.rows();
    if (n < 2) throw ContractError("median_bandwidth: need at least 2 samples");
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist.push_back(std::sqrt(kern::sqdist(x.row(i), x.row(j), x.cols())));
    std::sort(dist.begin(), dist.end());
    const std::size_t m = dist.size();
    const double med =
        m % 2 == 1 ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
    return med > 0.0 ? med : 1.0;
}

double resolve_bandwidth(const KernelConfig& cfg, const DenseMatrix& x) {
    return cfg.bandwidth_mode == BandwidthMode::kFixed ? cfg.sigma
                                                       : median_bandwidth(x);
}

NormalizedGram gaussian_gram(const DenseMatrix& x, double sigma) {
    if (!(sigma > 0.0)) throw ContractError("gaussian_gram: sigma must be positive");
    require_finite(x, "gaussian_gram");
    const std::size_t n = x.rows();
    if (n < 1) throw ContractError("gaussian_gram: empty input");
    const double inv = 1.0 / (2.0 * sigma * sigma);
    DenseMatrix a(n, n);
    for (std::size_t m = 0; m < n; ++m) {
        a(m, m) = 1.0 / static_cast<double>(n);
        for (std::size_t k = m + 1; k < n; ++k) {
            const double v =
                std::exp(-kern::sqdist(x.row(m), x.row(k), x.cols()) * inv) /
                static_cast<double>(n);
            a(m, k) = v;
            a(k, m) = v;
        }
    }
    return NormalizedGram{std::move(a), n};
}

double renyi_entropy(const NormalizedGram& a, double alpha) {
    validate_alpha(alpha);
    return entropy_from_eigenvalues(sym_eig(a.a).values, alpha);
}

namespace {

NormalizedGram renormalized_hadamard(std::span<const NormalizedGram> grams) {
    if (grams.size() < 2)
        throw ContractError("joint_entropy: need at least 2 variables");
    const std::size_t n = grams[0].n;
    DenseMatrix prod = grams[0].a;
    for (std::size_t i = 1; i < grams.size(); ++i) {
        if (grams[i].n != n)
            throw DimensionError("joint_entropy: gram sizes differ");
        prod = hadamard(prod, grams[i].a);
    }
    const double tr = prod.trace();
    if (!(tr > 0.0)) throw NumericError("joint_entropy: Hadamard product has zero trace");
    prod.scale_in_place(1.0 / tr);
    return NormalizedGram{std::move(prod), n};
}

}  // namespace

double joint_entropy(std::span<const NormalizedGram> grams, double alpha) {
    validate_alpha(alpha);
    return entropy_from_eigenvalues(sym_eig(renormalized_hadamard(grams).a).values,
                                    alpha);
}

double total_correlation(std::span<const NormalizedGram> grams, double alpha) {
    validate_alpha(alpha);
    double marginals = 0.0;
    for (const NormalizedGram& g : grams) marginals += renyi_entropy(g, alpha);
    return marginals - joint_entropy(grams, alpha);
}

double hsic(const DenseMatrix& x, const DenseMatrix& y, double sigma_x, double sigma_y) {
    if (x.rows() != y.rows())
        throw DimensionError("hsic: sample counts differ");
    const std::size_t n = x.rows();
    if (n < 2) throw ContractError("hsic: need at least 2 samples");
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
        throw ContractError("hsic: bandwidths must be positive");

    auto raw_gram = [](const DenseMatrix& m, double sigma) {
        const double inv = 1.0 / (2.0 * sigma * sigma);
        const std::size_t rows = m.rows();
        DenseMatrix k(rows, rows);
        for (std::size_t i = 0; i < rows; ++i) {
            k(i, i) = 1.0;
            for (std::size_t j = i + 1; j < rows; ++j) {
                const double v = std::exp(-kern::sqdist(m.row(i), m.row(j), m.cols()) * inv);
                k(i, j) = v;
                k(j, i) = v;
            }
        }
        return k;
    };
    auto center = [n](DenseMatrix k) {
        // H·K·H with H = I − J/N.
        std::vector<double> rowmean(n, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rowmean[i] = kern::sum(k.row(i), n) / static_cast<double>(n);
            total += rowmean[i];
        }
        total /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                k(i, j) += total - rowmean[i] - rowmean[j];
        return k;
    };

    const DenseMatrix kx = center(raw_gram(x, sigma_x));
    const DenseMatrix ky = center(raw_gram(y, sigma_y));
    const double t = kern::dot(kx.data(), ky.data(), kx.size());
    const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
    return t / denom;
}

NodeId renyi_entropy_node(Tape& t, NodeId gram, double alpha) {
    validate_alpha(alpha);
    const NodeId s = t.spectral_scalar(gram, SpectralFn::kPower, alpha);
    return t.scale(t.log2_scalar(s), 1.0 / (1.0 - alpha));
}

NodeId joint_gram_node(Tape& t, std::span<const NodeId> grams) {
    if (grams.size() < 2)
        throw ContractError("joint_gram: need at least 2 variables");
    NodeId prod = grams[0];
    for (std::size_t i = 1; i < grams.size(); ++i) prod = t.hadamard(prod, grams[i]);
    return t.div_scalar(prod, t.trace(prod));
}

NodeId total_correlation_node(Tape& t, std::span<const NodeId> grams, double alpha) {
    validate_alpha(alpha);
    NodeId acc = renyi_entropy_node(t, grams[0], alpha);
    for (std::size_t i = 1; i < grams.size(); ++i)
        acc = t.add(acc, renyi_entropy_node(t, grams[i], alpha));
    const NodeId joint = renyi_entropy_node(t, joint_gram_node(t, grams), alpha);
    return t.sub(acc, joint);
}

}  // namespace cumi::info
