#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "cumi/model.hpp"
#include "cumi/rng.hpp"

using namespace cumi;

namespace {

DenseMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("layer widths follow the d-1.2d-0.5d and 15n-d-2.4d-d sequences") {
    // d=40, n=7: common encoder 40 -> 48 -> 20 -> 70
    const CumiModel m = init_model({{40, 0}, {40, 1}}, 7, 9);
    const Mlp& enc = m.common_encoders[0];
    REQUIRE(enc.layers.size() == 3);
    CHECK(enc.layers[0].w.rows() == 40);
    CHECK(enc.layers[0].w.cols() == 48);
    CHECK(enc.layers[1].w.cols() == 20);
    CHECK(enc.layers[2].w.cols() == 70);

    const Mlp& uni = m.unique_encoders[0];
    CHECK(uni.layers[2].w.cols() == 35);  // 5n

    // decoder 105 -> 40 -> 96 -> 40
    const Mlp& dec = m.decoders[0];
    REQUIRE(dec.layers.size() == 3);
    CHECK(dec.layers[0].w.rows() == 105);
    CHECK(dec.layers[0].w.cols() == 40);
    CHECK(dec.layers[1].w.cols() == 96);
    CHECK(dec.layers[2].w.cols() == 40);

    // v=2, n=10: classifier input width (5v+10)n = 200
    const CumiModel m2 = init_model({{12, 0}, {9, 1}}, 10, 9);
    CHECK(m2.classifier->w.rows() == 200);
    CHECK(m2.z_width() == 200);
}

TEST_CASE("shape contracts hold over a randomized (d, n, v) sweep") {
    Rng rng(31);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t v = 2 + static_cast<std::size_t>(rng.uniform_int(0, 4));
        const int n = 2 + rng.uniform_int(0, 31);
        std::vector<ViewSpec> specs;
        for (std::size_t i = 0; i < v; ++i)
            specs.push_back(
                {5 + static_cast<std::size_t>(rng.uniform_int(0, 295)), static_cast<int>(i)});
        const CumiModel m = init_model(specs, n, 1000 + static_cast<std::uint64_t>(rep));

        CHECK(m.dims.d_c == 10 * static_cast<std::size_t>(n));
        CHECK(m.dims.d_u == 5 * static_cast<std::size_t>(n));
        CHECK(m.z_width() == (5 * v + 10) * static_cast<std::size_t>(n));

        const std::size_t rows = 3;
        std::vector<DenseMatrix> views;
        for (std::size_t i = 0; i < v; ++i)
            views.push_back(random_matrix(rng, rows, specs[i].dim));
        for (std::size_t i = 0; i < v; ++i) {
            const DenseMatrix c = encode_common(m, i, views[i]);
            CHECK(c.rows() == rows);
            CHECK(c.cols() == m.dims.d_c);
            const DenseMatrix u = encode_unique(m, i, views[i]);
            CHECK(u.cols() == m.dims.d_u);
            const DenseMatrix xhat = decode(m, i, c, u);
            CHECK(xhat.rows() == rows);
            CHECK(xhat.cols() == specs[i].dim);
        }
        const std::vector<DenseMatrix> all = encode_all_common(m, views);
        CHECK(all.size() == v);
    }
}

TEST_CASE("zero input with zero biases encodes and decodes to zero") {
    const CumiModel m = init_model({{6, 0}, {4, 1}}, 3, 5);
    const DenseMatrix zero(4, 6);
    CHECK(encode_common(m, 0, zero).frobenius_norm() == 0.0);
    CHECK(encode_unique(m, 0, zero).frobenius_norm() == 0.0);
    CHECK(decode(m, 0, DenseMatrix(4, 30), DenseMatrix(4, 15)).frobenius_norm() == 0.0);
}

TEST_CASE("encoding is deterministic and errors on bad widths") {
    const CumiModel m = init_model({{6, 0}, {4, 1}}, 3, 5);
    Rng rng(2);
    const DenseMatrix x = random_matrix(rng, 5, 6);
    CHECK(encode_common(m, 0, x) == encode_common(m, 0, x));
    CHECK_THROWS_AS(encode_common(m, 0, DenseMatrix(5, 7)), DimensionError);
    CHECK_THROWS_AS(decode(m, 0, DenseMatrix(5, 30), DenseMatrix(5, 14)), DimensionError);
    CHECK_THROWS_AS(init_model({}, 3, 1), ContractError);
    CHECK_THROWS_AS(init_model({{6, 0}}, 1, 1), ContractError);
    CHECK_THROWS_AS(init_model({{6, 0}}, 0, 1), ContractError);  // needs dims
}

TEST_CASE("same seed reproduces identical weights; different seeds differ") {
    const CumiModel a = init_model({{8, 0}, {5, 1}}, 2, 77);
    const CumiModel b = init_model({{8, 0}, {5, 1}}, 2, 77);
    const CumiModel c = init_model({{8, 0}, {5, 1}}, 2, 78);
    auto pa = a.parameters();
    auto pb = b.parameters();
    auto pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool all_equal = true;
    bool any_differ = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        all_equal = all_equal && (*pa[i] == *pb[i]);
        any_differ = any_differ || !(*pa[i] == *pc[i]);
    }
    CHECK(all_equal);
    CHECK(any_differ);
}

TEST_CASE("tape forward matches the plain forward bit for bit") {
    const CumiModel m = init_model({{6, 0}, {4, 1}}, 2, 123);
    Rng rng(5);
    const std::vector<DenseMatrix> views{random_matrix(rng, 7, 6),
                                         random_matrix(rng, 7, 4)};
    Tape t;
    const ModelNodes nodes = bind_model(t, m);
    std::vector<NodeId> x_nodes;
    for (const DenseMatrix& v : views) x_nodes.push_back(t.leaf(v));
    const ForwardNodes f = forward(t, m, nodes, x_nodes, 0);

    CHECK(t.value(f.c) == encode_common(m, 0, views[0]));
    CHECK(t.value(f.u[1]) == encode_unique(m, 1, views[1]));
    const DenseMatrix xhat0 =
        decode(m, 0, encode_common(m, 0, views[0]), encode_unique(m, 0, views[0]));
    CHECK(t.value(f.xhat[0]) == xhat0);
    CHECK(t.value(f.z).cols() == m.z_width());
    CHECK(t.value(f.logits).cols() == 2);
}

TEST_CASE("donor dataflow: c depends only on the donor view") {
    const CumiModel m = init_model({{6, 0}, {4, 1}}, 2, 9);
    Rng rng(6);
    const DenseMatrix x1 = random_matrix(rng, 5, 6);
    const DenseMatrix x2 = random_matrix(rng, 5, 4);
    DenseMatrix x2_perturbed = x2;
    x2_perturbed(0, 0) += 10.0;

    auto run_c = [&](const DenseMatrix& second) {
        Tape t;
        const ModelNodes nodes = bind_model(t, m);
        const std::vector<NodeId> xs{t.leaf(x1), t.leaf(second)};
        return t.value(forward(t, m, nodes, xs, 0).c);
    };
    CHECK(run_c(x2) == run_c(x2_perturbed));
}

TEST_CASE("donor and unique-view gradient isolation") {
    const CumiModel m = init_model({{6, 0}, {4, 1}}, 0, 15, LatentDims{2, 1});
    Rng rng(7);
    const std::vector<DenseMatrix> views{random_matrix(rng, 5, 6),
                                         random_matrix(rng, 5, 4)};

    Tape t;
    const ModelNodes nodes = bind_model(t, m);
    std::vector<NodeId> xs;
    for (const DenseMatrix& v : views) xs.push_back(t.leaf(v));
    const ForwardNodes f = forward(t, m, nodes, xs, /*donor=*/0);

    // Reconstruction loss of view 0 only.
    const NodeId loss0 = t.mean_squared_error(xs[0], f.xhat[0]);
    t.backward(loss0);

    // Non-donor common encoder gets exactly zero gradient.
    for (const LayerNodes& l : nodes.common[1].layers) {
        CHECK(t.grad(l.w).frobenius_norm() == 0.0);
        CHECK(t.grad(l.b).frobenius_norm() == 0.0);
    }
    // view-1 unique encoder does not see view-0 reconstruction loss.
    for (const LayerNodes& l : nodes.unique[1].layers) {
        CHECK(t.grad(l.w).frobenius_norm() == 0.0);
        CHECK(t.grad(l.b).frobenius_norm() == 0.0);
    }
    // Donor common and view-0 unique encoders do.
    CHECK(t.grad(nodes.common[0].layers[0].w).frobenius_norm() > 0.0);
    CHECK(t.grad(nodes.unique[0].layers[0].w).frobenius_norm() > 0.0);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    const CumiModel m = init_model({{6, 0}, {4, 1}}, 3, 20240102);
    const std::string path =
        (std::filesystem::temp_directory_path() / "cumi_ckpt_test.json").string();
    save_model(m, path);
    const CumiModel loaded = load_model(path);

    CHECK(loaded.n_classes == m.n_classes);
    CHECK(loaded.seed == m.seed);
    CHECK(loaded.dims.d_c == m.dims.d_c);
    CHECK(loaded.views.size() == m.views.size());
    auto pa = m.parameters();
    auto pb = loaded.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);

    // Identical weights + identical views => identical common codes.
    Rng rng(3);
    const DenseMatrix x = random_matrix(rng, 4, 6);
    CHECK(encode_common(m, 0, x) == encode_common(loaded, 0, x));

    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), ParseError);
}
