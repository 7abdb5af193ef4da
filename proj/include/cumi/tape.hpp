#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cumi/eig.hpp"
#include "cumi/matrix.hpp"

namespace cumi {

using NodeId = std::int32_t;

enum class OpKind : std::uint8_t {
    kLeaf,
    kMatmul,
    kAdd,
    kSub,
    kHadamard,
    kRelu,
    kAffine,
    kConcatCols,
    kSum,
    kTrace,
    kScale,
    kDivScalar,
    kLog2Scalar,
    kGaussianGram,
    kSpectralSum,
    kSoftmaxCrossEntropy,
};

enum class SpectralFn : std::uint8_t { kPower };

// Reverse-mode Wengert list over DenseMatrix values. Nodes are appended in
// creation order, so the list itself is a topological order; backward() walks
// it once in reverse. A tape is confined to one thread at a time; distinct
// tapes are independent.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    NodeId leaf(DenseMatrix value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId hadamard(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    // x·w + row-broadcast bias (bias is 1×cols); the bias gradient is the
    // column sum of the upstream gradient.
    NodeId affine(NodeId x, NodeId w, NodeId bias);
    NodeId concat_cols(std::span<const NodeId> parts);
    NodeId sum(NodeId a);    // 1×1
    NodeId trace(NodeId a);  // 1×1
    NodeId scale(NodeId a, double c);
    NodeId div_scalar(NodeId a, NodeId s);  // matrix ÷ (1×1 scalar node)
    NodeId log2_scalar(NodeId s);
    NodeId mean_squared_error(NodeId a, NodeId b);

    // Trace-normalized Gaussian Gram of the rows of x: A = K/N with
    // K(m,n) = exp(-|x_m-x_n|²/(2σ²)). Differentiable w.r.t. x; σ is a
    // constant (bandwidths are chosen on detached values).
    NodeId gaussian_gram(NodeId x, double sigma);

    // Σ_m f(λ_m) over the clamped eigenspectrum of a symmetric matrix.
    // Eigenvalues below 1e-12 are treated as exactly zero. Backward applies
    // U·diag(f'(λ))·Uᵀ; a clamped eigenvalue where f' is undefined raises
    // NumericError naming the eigenvalue index.
    NodeId spectral_scalar(NodeId a, SpectralFn fn, double param);

    // Mean softmax cross-entropy with integer class labels (natural log).
    NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);

    const DenseMatrix& value(NodeId id) const;
    const DenseMatrix& grad(NodeId id) const;
    OpKind op(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }

    void zero_grad();
    // Accumulates d(loss)/d(node) into every reachable node's grad; repeated
    // calls without zero_grad() add up. ContractError unless loss is 1×1.
    void backward(NodeId loss);

    static constexpr double kEigenvalueFloor = 1e-12;

private:
    using BackwardFn = std::function<void(Tape&, std::vector<DenseMatrix>&)>;

    struct Node {
        DenseMatrix value;
        DenseMatrix grad;
        OpKind op;
        std::vector<NodeId> parents;
        BackwardFn backward;
    };

    NodeId push(DenseMatrix value, OpKind op, std::vector<NodeId> parents,
                BackwardFn backward);
    const Node& at(NodeId id) const;
    Node& at(NodeId id);

    std::vector<Node> nodes_;
};

// Max over all parameter entries of
// |analytic - central difference| / max(1, |central difference|).
// The builder must be a pure function of the leaf nodes it is handed.
double grad_check(
    const std::function<NodeId(Tape&, std::span<const NodeId>)>& loss_builder,
    std::span<DenseMatrix> params, double eps);

}  // namespace cumi
