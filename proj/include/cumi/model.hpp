#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cumi/matrix.hpp"
#include "cumi/tape.hpp"

namespace cumi {

struct ViewSpec {
    std::size_t dim = 0;
    int index = 0;
};

// Final encoder widths. Defaults follow the 10n/5n convention; the synthetic
// experiment overrides both to 1 for curve comparison.
struct LatentDims {
    std::size_t d_c = 0;
    std::size_t d_u = 0;
};

struct Layer {
    DenseMatrix w;  // in×out
    DenseMatrix b;  // 1×out
};

// Hidden layers use ReLU; the final layer is linear so latents and
// reconstructions can take negative values.
struct Mlp {
    std::vector<Layer> layers;
};

// Aligned minibatch: one feature matrix per view plus integer labels
// (empty label vector = unsupervised batch).
struct MultiViewBatch {
    std::vector<DenseMatrix> views;
    std::vector<int> labels;
};

// Per-view common encoders, unique encoders and decoders, plus an optional
// affine classifier over the concatenated representation.
struct CumiModel {
    std::vector<ViewSpec> views;
    int n_classes = 0;  // 0 = no classifier head
    LatentDims dims;
    std::uint64_t seed = 0;
    std::vector<Mlp> common_encoders;
    std::vector<Mlp> unique_encoders;
    std::vector<Mlp> decoders;
    std::optional<Layer> classifier;

    std::size_t view_count() const { return views.size(); }
    std::size_t z_width() const {
        return dims.d_c + view_count() * dims.d_u;
    }
    // Stable flat parameter order: per view (common, unique, decoder layers,
    // each w then b), then the classifier.
    std::vector<DenseMatrix*> parameters();
    std::vector<const DenseMatrix*> parameters() const;
};

// Rounds half-up, e.g. 1.2d / 0.5d / 2.4d hidden widths.
std::size_t scaled_width(std::size_t d, double factor);

// Glorot-style uniform init: weights ~ U(−√(6/fan_in), +√(6/fan_in)),
// biases zero; fully determined by the seed.
CumiModel init_model(const std::vector<ViewSpec>& views, int n_classes,
                     std::uint64_t seed, std::optional<LatentDims> dims = {});

// ---- plain (evaluation) forward ----

DenseMatrix mlp_forward(const Mlp& mlp, const DenseMatrix& x);
DenseMatrix encode_common(const CumiModel& m, std::size_t view, const DenseMatrix& x);
DenseMatrix encode_unique(const CumiModel& m, std::size_t view, const DenseMatrix& x);
DenseMatrix decode(const CumiModel& m, std::size_t view, const DenseMatrix& c,
                   const DenseMatrix& u);
// C^(i) from every view's own common encoder (consensus diagnostics).
std::vector<DenseMatrix> encode_all_common(const CumiModel& m,
                                           std::span<const DenseMatrix> views);

// ---- tape (training) forward ----

struct LayerNodes {
    NodeId w, b;
};
struct MlpNodes {
    std::vector<LayerNodes> layers;
};
struct ModelNodes {
    std::vector<MlpNodes> common, unique, decoders;
    std::optional<LayerNodes> classifier;
    std::vector<NodeId> ordered;  // matches CumiModel::parameters() order
};

ModelNodes bind_model(Tape& t, const CumiModel& m);
// Same order as CumiModel::parameters(); used to rebuild bindings inside
// gradient checks.
ModelNodes bind_model_from(Tape& t, const CumiModel& m, std::span<const NodeId> leaves);

NodeId mlp_forward_node(Tape& t, const MlpNodes& mlp, NodeId x);

struct ForwardNodes {
    NodeId c = -1;                 // donor view's common encoding
    std::vector<NodeId> u;         // per-view unique encodings
    std::vector<NodeId> xhat;      // per-view reconstructions
    NodeId z = -1;                 // [c | u_1 | ... | u_v]
    NodeId logits = -1;            // -1 when the model has no classifier
};

// donor is 0-based; the common code c is taken from the donor view only.
ForwardNodes forward(Tape& t, const CumiModel& m, const ModelNodes& nodes,
                     std::span<const NodeId> x_nodes, std::size_t donor);

// Versioned JSON checkpoint; round-trips weights bit-exactly.
void save_model(const CumiModel& m, const std::string& path);
CumiModel load_model(const std::string& path);

}  // namespace cumi
