#include "cumi/model.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "cumi/rng.hpp"

namespace cumi {

namespace {

using nlohmann::json;

std::vector<std::size_t> encoder_widths(std::size_t d, std::size_t out) {
    return {d, scaled_width(d, 1.2), scaled_width(d, 0.5), out};
}

std::vector<std::size_t> decoder_widths(std::size_t d, std::size_t latent) {
    return {latent, d, scaled_width(d, 2.4), d};
}

Mlp init_mlp(const std::vector<std::size_t>& widths, Rng& rng) {
    Mlp mlp;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.w = DenseMatrix(widths[l], widths[l + 1]);
        layer.b = DenseMatrix(1, widths[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(widths[l]));
        for (std::size_t i = 0; i < layer.w.size(); ++i)
            layer.w.data()[i] = rng.uniform(-bound, bound);
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

void collect(const Mlp& mlp, std::vector<const DenseMatrix*>& out) {
    for (const Layer& l : mlp.layers) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
}

}  // namespace

std::size_t scaled_width(std::size_t d, double factor) {
    const auto w = static_cast<std::size_t>(
        std::floor(static_cast<double>(d) * factor + 0.5));
    return w == 0 ? 1 : w;
}

std::vector<const DenseMatrix*> CumiModel::parameters() const {
    std::vector<const DenseMatrix*> out;
    for (std::size_t v = 0; v < view_count(); ++v) {
        collect(common_encoders[v], out);
        collect(unique_encoders[v], out);
        collect(decoders[v], out);
    }
    if (classifier) {
        out.push_back(&classifier->w);
        out.push_back(&classifier->b);
    }
    return out;
}

std::vector<DenseMatrix*> CumiModel::parameters() {
    std::vector<DenseMatrix*> out;
    for (const DenseMatrix* p : static_cast<const CumiModel*>(this)->parameters())
        out.push_back(const_cast<DenseMatrix*>(p));
    return out;
}

CumiModel init_model(const std::vector<ViewSpec>& views, int n_classes,
                     std::uint64_t seed, std::optional<LatentDims> dims) {
    if (views.empty()) throw ContractError("init_model: no views");
    for (const ViewSpec& v : views)
        if (v.dim < 1) throw ContractError("init_model: view dimension must be >= 1");
    if (n_classes == 0 && !dims)
        throw ContractError("init_model: latent dims required when no classifier");
    if (n_classes != 0 && n_classes < 2)
        throw ContractError("init_model: n_classes must be >= 2 (or 0 for none)");

    CumiModel m;
    m.views = views;
    m.n_classes = n_classes;
    m.seed = seed;
    m.dims = dims ? *dims
                  : LatentDims{10 * static_cast<std::size_t>(n_classes),
                               5 * static_cast<std::size_t>(n_classes)};
    if (m.dims.d_c < 1 || m.dims.d_u < 1)
        throw ContractError("init_model: latent dims must be >= 1");

    Rng rng(seed);
    for (const ViewSpec& v : views) {
        m.common_encoders.push_back(init_mlp(encoder_widths(v.dim, m.dims.d_c), rng));
        m.unique_encoders.push_back(init_mlp(encoder_widths(v.dim, m.dims.d_u), rng));
        m.decoders.push_back(
            init_mlp(decoder_widths(v.dim, m.dims.d_c + m.dims.d_u), rng));
    }
    if (n_classes > 0) {
        const std::size_t zw = m.z_width();
        Layer head;
        head.w = DenseMatrix(zw, static_cast<std::size_t>(n_classes));
        head.b = DenseMatrix(1, static_cast<std::size_t>(n_classes));
        const double bound = std::sqrt(6.0 / static_cast<double>(zw));
        for (std::size_t i = 0; i < head.w.size(); ++i)
            head.w.data()[i] = rng.uniform(-bound, bound);
        m.classifier = std::move(head);
    }
    return m;
}

DenseMatrix mlp_forward(const Mlp& mlp, const DenseMatrix& x) {
    DenseMatrix h = x;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        const Layer& layer = mlp.layers[l];
        if (h.cols() != layer.w.rows())
            throw DimensionError("mlp_forward: input width mismatch");
        DenseMatrix out = matmul(h, layer.w);
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += layer.b(0, j);
        if (l + 1 < mlp.layers.size())
            for (std::size_t i = 0; i < out.size(); ++i)
                out.data()[i] = out.data()[i] > 0.0 ? out.data()[i] : 0.0;
        h = std::move(out);
    }
    return h;
}

DenseMatrix encode_common(const CumiModel& m, std::size_t view, const DenseMatrix& x) {
    if (view >= m.view_count()) throw ContractError("encode_common: bad view index");
    if (x.cols() != m.views[view].dim)
        throw DimensionError("encode_common: feature width does not match view");
    return mlp_forward(m.common_encoders[view], x);
}

DenseMatrix encode_unique(const CumiModel& m, std::size_t view, const DenseMatrix& x) {
    if (view >= m.view_count()) throw ContractError("encode_unique: bad view index");
    if (x.cols() != m.views[view].dim)
        throw DimensionError("encode_unique: feature width does not match view");
    return mlp_forward(m.unique_encoders[view], x);
}

DenseMatrix decode(const CumiModel& m, std::size_t view, const DenseMatrix& c,
                   const DenseMatrix& u) {
    if (view >= m.view_count()) throw ContractError("decode: bad view index");
    if (c.cols() != m.dims.d_c || u.cols() != m.dims.d_u)
        throw DimensionError("decode: latent widths do not match model dims");
    if (c.rows() != u.rows()) throw DimensionError("decode: row counts differ");
    DenseMatrix cat(c.rows(), c.cols() + u.cols());
    for (std::size_t i = 0; i < c.rows(); ++i) {
        for (std::size_t j = 0; j < c.cols(); ++j) cat(i, j) = c(i, j);
        for (std::size_t j = 0; j < u.cols(); ++j) cat(i, c.cols() + j) = u(i, j);
    }
    return mlp_forward(m.decoders[view], cat);
}

std::vector<DenseMatrix> encode_all_common(const CumiModel& m,
                                           std::span<const DenseMatrix> views) {
    if (views.size() != m.view_count())
        throw ContractError("encode_all_common: view count mismatch");
    std::vector<DenseMatrix> out;
    out.reserve(views.size());
    for (std::size_t v = 0; v < views.size(); ++v)
        out.push_back(encode_common(m, v, views[v]));
    return out;
}

ModelNodes bind_model(Tape& t, const CumiModel& m) {
    std::vector<NodeId> leaves;
    for (const DenseMatrix* p : m.parameters()) leaves.push_back(t.leaf(*p));
    return bind_model_from(t, m, leaves);
}

ModelNodes bind_model_from(Tape& t, const CumiModel& m,
                           std::span<const NodeId> leaves) {
    (void)t;
    ModelNodes nodes;
    std::size_t k = 0;
    auto take_mlp = [&](const Mlp& mlp) {
        MlpNodes mn;
        for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
            LayerNodes ln{leaves[k], leaves[k + 1]};
            k += 2;
            mn.layers.push_back(ln);
        }
        return mn;
    };
    for (std::size_t v = 0; v < m.view_count(); ++v) {
        nodes.common.push_back(take_mlp(m.common_encoders[v]));
        nodes.unique.push_back(take_mlp(m.unique_encoders[v]));
        nodes.decoders.push_back(take_mlp(m.decoders[v]));
    }
    if (m.classifier) {
        nodes.classifier = LayerNodes{leaves[k], leaves[k + 1]};
        k += 2;
    }
    if (k != leaves.size())
        throw ContractError("bind_model_from: leaf count does not match model");
    nodes.ordered.assign(leaves.begin(), leaves.end());
    return nodes;
}

NodeId mlp_forward_node(Tape& t, const MlpNodes& mlp, NodeId x) {
    NodeId h = x;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        h = t.affine(h, mlp.layers[l].w, mlp.layers[l].b);
        if (l + 1 < mlp.layers.size()) h = t.relu(h);
    }
    return h;
}

ForwardNodes forward(Tape& t, const CumiModel& m, const ModelNodes& nodes,
                     std::span<const NodeId> x_nodes, std::size_t donor) {
    if (x_nodes.size() != m.view_count())
        throw ContractError("forward: view count mismatch");
    if (donor >= m.view_count()) throw ContractError("forward: donor out of range");

    ForwardNodes f;
    f.c = mlp_forward_node(t, nodes.common[donor], x_nodes[donor]);
    for (std::size_t v = 0; v < m.view_count(); ++v)
        f.u.push_back(mlp_forward_node(t, nodes.unique[v], x_nodes[v]));
    for (std::size_t v = 0; v < m.view_count(); ++v) {
        const std::array<NodeId, 2> cu{f.c, f.u[v]};
        const NodeId cat = t.concat_cols(cu);
        f.xhat.push_back(mlp_forward_node(t, nodes.decoders[v], cat));
    }
    std::vector<NodeId> zparts{f.c};
    zparts.insert(zparts.end(), f.u.begin(), f.u.end());
    f.z = t.concat_cols(zparts);
    if (nodes.classifier)
        f.logits = t.affine(f.z, nodes.classifier->w, nodes.classifier->b);
    return f;
}

namespace {

json tensor_to_json(const DenseMatrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = std::vector<double>(m.data(), m.data() + m.size());
    return j;
}

DenseMatrix tensor_from_json(const json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols)
        throw ParseError("checkpoint tensor: data length does not match shape");
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = data[i];
    return m;
}

json mlp_to_json(const Mlp& mlp) {
    json layers = json::array();
    for (const Layer& l : mlp.layers)
        layers.push_back({{"w", tensor_to_json(l.w)}, {"b", tensor_to_json(l.b)}});
    return layers;
}

Mlp mlp_from_json(const json& j) {
    Mlp mlp;
    for (const json& lj : j)
        mlp.layers.push_back(
            Layer{tensor_from_json(lj.at("w")), tensor_from_json(lj.at("b"))});
    return mlp;
}

}  // namespace

void save_model(const CumiModel& m, const std::string& path) {
    json j;
    j["format"] = "cumi-checkpoint";
    j["format_version"] = 1;
    json meta;
    meta["n_classes"] = m.n_classes;
    meta["seed"] = m.seed;
    meta["d_c"] = m.dims.d_c;
    meta["d_u"] = m.dims.d_u;
    json vd = json::array();
    for (const ViewSpec& v : m.views) vd.push_back(v.dim);
    meta["view_dims"] = vd;
    j["meta"] = meta;

    json views = json::array();
    for (std::size_t v = 0; v < m.view_count(); ++v) {
        views.push_back({{"common", mlp_to_json(m.common_encoders[v])},
                         {"unique", mlp_to_json(m.unique_encoders[v])},
                         {"decoder", mlp_to_json(m.decoders[v])}});
    }
    j["views"] = views;
    if (m.classifier)
        j["classifier"] = {{"w", tensor_to_json(m.classifier->w)},
                           {"b", tensor_to_json(m.classifier->b)}};

    std::ofstream out(path);
    if (!out) throw ParseError("save_model: cannot open " + path);
    out << j.dump(1) << "\n";
    if (!out) throw ParseError("save_model: write failed for " + path);
}

CumiModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_model: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("load_model: " + path + ": " + e.what());
    }
    if (j.value("format", "") != "cumi-checkpoint")
        throw ParseError("load_model: " + path + " is not a cumi checkpoint");
    if (j.value("format_version", 0) != 1)
        throw ParseError("load_model: unsupported checkpoint version");

    CumiModel m;
    const json& meta = j.at("meta");
    m.n_classes = meta.at("n_classes").get<int>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.dims = LatentDims{meta.at("d_c").get<std::size_t>(),
                        meta.at("d_u").get<std::size_t>()};
    int idx = 0;
    for (const json& d : meta.at("view_dims"))
        m.views.push_back(ViewSpec{d.get<std::size_t>(), idx++});

    for (const json& vj : j.at("views")) {
        m.common_encoders.push_back(mlp_from_json(vj.at("common")));
        m.unique_encoders.push_back(mlp_from_json(vj.at("unique")));
        m.decoders.push_back(mlp_from_json(vj.at("decoder")));
    }
    if (j.contains("classifier"))
        m.classifier = Layer{tensor_from_json(j.at("classifier").at("w")),
                             tensor_from_json(j.at("classifier").at("b"))};
    if (m.views.size() != m.common_encoders.size())
        throw ParseError("load_model: inconsistent view count");
    return m;
}

}  // namespace cumi
