#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cumi/eig.hpp"
#include "cumi/matrix.hpp"
#include "cumi/rng.hpp"
#include "cumi/tape.hpp"

using namespace cumi;

namespace {

DenseMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                          double hi = 1.0) {
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

DenseMatrix random_symmetric(Rng& rng, std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

DenseMatrix random_psd(Rng& rng, std::size_t n) {
    const DenseMatrix x = random_matrix(rng, n, n);
    return matmul_tn(x, x);  // XᵀX
}

}  // namespace

TEST_CASE("matmul: identity, zero annihilation, shape errors") {
    const DenseMatrix a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
    CHECK(max_abs_diff(matmul(DenseMatrix::identity(2), a), a) == 0.0);

    const DenseMatrix p = DenseMatrix::from_rows({{1, 0}, {0, 0}});
    const DenseMatrix q = DenseMatrix::from_rows({{0}, {5}});
    const DenseMatrix r = matmul(p, q);
    CHECK(r(0, 0) == 0.0);
    CHECK(r(1, 0) == 0.0);

    CHECK_THROWS_AS(matmul(a, DenseMatrix(3, 2)), DimensionError);
}

TEST_CASE("matmul transposed variants agree with explicit transposes") {
    Rng rng(7);
    const DenseMatrix a = random_matrix(rng, 4, 6);
    const DenseMatrix b = random_matrix(rng, 5, 6);
    const DenseMatrix c = random_matrix(rng, 4, 5);
    CHECK(max_abs_diff(matmul_nt(a, b), matmul(a, b.transpose())) <= 1e-12);
    CHECK(max_abs_diff(matmul_tn(a, c), matmul(a.transpose(), c)) <= 1e-12);
}

TEST_CASE("elementwise: hadamard and identities") {
    const DenseMatrix a = DenseMatrix::from_rows({{1, 2}});
    const DenseMatrix b = DenseMatrix::from_rows({{3, 4}});
    const DenseMatrix h = hadamard(a, b);
    CHECK(h(0, 0) == 3.0);
    CHECK(h(0, 1) == 8.0);

    const DenseMatrix zero(1, 2);
    CHECK(max_abs_diff(add(a, zero), a) == 0.0);
    const DenseMatrix ones(1, 2, 1.0);
    CHECK(max_abs_diff(hadamard(a, ones), a) == 0.0);
    CHECK_THROWS_AS(add(a, DenseMatrix(2, 2)), DimensionError);
}

TEST_CASE("sym_eig: fixed spectra") {
    const EigenPair ident = sym_eig(DenseMatrix::identity(3));
    for (double v : ident.values) CHECK(v == doctest::Approx(1.0));

    const EigenPair diag = sym_eig(DenseMatrix::from_rows({{3, 0}, {0, 1}}));
    CHECK(diag.values[0] == doctest::Approx(3.0));
    CHECK(diag.values[1] == doctest::Approx(1.0));

    const EigenPair pair = sym_eig(DenseMatrix::from_rows({{2, 1}, {1, 2}}));
    CHECK(pair.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(pair.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::fabs(pair.vectors(0, 0)) == doctest::Approx(s));
    CHECK(std::fabs(pair.vectors(1, 0)) == doctest::Approx(s));
    CHECK(pair.vectors(0, 0) * pair.vectors(1, 0) > 0.0);   // (1,1)/√2 direction
    CHECK(pair.vectors(0, 1) * pair.vectors(1, 1) < 0.0);   // (1,-1)/√2 direction
}

TEST_CASE("sym_eig: reconstruction and orthogonality on random symmetric 8x8") {
    Rng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix a = random_symmetric(rng, 8);
        const EigenPair e = sym_eig(a);

        for (std::size_t k = 1; k < e.values.size(); ++k)
            CHECK(e.values[k - 1] >= e.values[k]);

        DenseMatrix scaled = e.vectors;
        for (std::size_t c = 0; c < 8; ++c)
            for (std::size_t r = 0; r < 8; ++r) scaled(r, c) *= e.values[c];
        const DenseMatrix recon = matmul_nt(scaled, e.vectors);
        CHECK(sub(recon, a).frobenius_norm() <= 1e-8);

        const DenseMatrix gram = matmul_tn(e.vectors, e.vectors);
        CHECK(sub(gram, DenseMatrix::identity(8)).frobenius_norm() <= 1e-8);
    }
}

TEST_CASE("sym_eig: determinism and input validation") {
    Rng rng(11);
    const DenseMatrix a = random_symmetric(rng, 6);
    const EigenPair e1 = sym_eig(a);
    const EigenPair e2 = sym_eig(a);
    CHECK(e1.values == e2.values);
    CHECK(e1.vectors == e2.vectors);
    CHECK_THROWS_AS(sym_eig(DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("tape matmul gradient: sum(A*B) at A=B=I") {
    Tape t;
    const NodeId a = t.leaf(DenseMatrix::identity(2));
    const NodeId b = t.leaf(DenseMatrix::identity(2));
    const NodeId loss = t.sum(t.matmul(a, b));
    t.backward(loss);
    // d sum(A·B)/dA = 1·Bᵀ = I... with all-ones upstream: ones·Bᵀ.
    const DenseMatrix expected = DenseMatrix::from_rows({{1, 1}, {1, 1}});
    // g·Bᵀ with g = ones and B = I gives the all-ones matrix.
    CHECK(max_abs_diff(t.grad(a), matmul_nt(expected, DenseMatrix::identity(2))) == 0.0);
}

TEST_CASE("tape relu: values and subgradient mask") {
    Tape t;
    const NodeId x = t.leaf(DenseMatrix::from_rows({{-1, 2}}));
    const NodeId y = t.relu(x);
    CHECK(t.value(y)(0, 0) == 0.0);
    CHECK(t.value(y)(0, 1) == 2.0);
    t.backward(t.sum(y));
    CHECK(t.grad(x)(0, 0) == 0.0);
    CHECK(t.grad(x)(0, 1) == 1.0);

    Tape t2;
    const NodeId neg = t2.leaf(DenseMatrix::from_rows({{-3, -0.5}}));
    const NodeId out = t2.relu(neg);
    CHECK(t2.value(out).frobenius_norm() == 0.0);
}

TEST_CASE("tape backward: contract, accumulation, scaling chains") {
    Tape t;
    const NodeId w = t.leaf(DenseMatrix(2, 2, 1.5));
    const NodeId s = t.sum(w);
    CHECK_THROWS_AS(t.backward(w), ContractError);

    t.backward(s);
    CHECK(max_abs_diff(t.grad(w), DenseMatrix(2, 2, 1.0)) == 0.0);
    t.backward(s);  // accumulates
    CHECK(max_abs_diff(t.grad(w), DenseMatrix(2, 2, 2.0)) == 0.0);
    t.zero_grad();
    CHECK(t.grad(w).frobenius_norm() == 0.0);

    // loss = 0 · sum(W) has zero gradient everywhere.
    const NodeId zero_loss = t.scale(s, 0.0);
    t.backward(zero_loss);
    CHECK(t.grad(w).frobenius_norm() == 0.0);

    // x -> c·x propagates exactly c through a scalar chain.
    Tape t3;
    const NodeId x = t3.leaf(DenseMatrix(1, 1, 2.0));
    t3.backward(t3.scale(t3.scale(x, -4.0), 0.5));
    CHECK(t3.grad(x)(0, 0) == doctest::Approx(-2.0));
}

TEST_CASE("spectral_scalar: trace identity and quadratic spectrum") {
    Tape t;
    Rng rng(5);
    const DenseMatrix a = random_psd(rng, 5);
    const NodeId n = t.leaf(a);
    const NodeId tr = t.spectral_scalar(n, SpectralFn::kPower, 1.0);
    CHECK(t.value(tr)(0, 0) == doctest::Approx(a.trace()).epsilon(1e-10));

    Tape t2;
    const NodeId half = t2.leaf(scale(DenseMatrix::identity(2), 0.5));
    const NodeId sq = t2.spectral_scalar(half, SpectralFn::kPower, 2.0);
    CHECK(t2.value(sq)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("spectral_scalar gradient: tr(A^2) has gradient 2A") {
    Tape t;
    const DenseMatrix a = DenseMatrix::from_rows({{2, 1}, {1, 2}});
    const NodeId n = t.leaf(a);
    t.backward(t.spectral_scalar(n, SpectralFn::kPower, 2.0));
    CHECK(max_abs_diff(t.grad(n), scale(a, 2.0)) <= 1e-9);
}

TEST_CASE("spectral gradients match finite differences for several powers") {
    Rng rng(99);
    for (double alpha : {1.01, 2.0, 3.0}) {
        DenseMatrix a = random_psd(rng, 6);
        std::vector<DenseMatrix> params{a};
        const double err = grad_check(
            [alpha](Tape& t, std::span<const NodeId> ids) {
                return t.spectral_scalar(ids[0], SpectralFn::kPower, alpha);
            },
            params, 1e-5);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("grad_check: quadratic loss is exact to roundoff") {
    Rng rng(3);
    DenseMatrix w = random_matrix(rng, 3, 4);
    std::vector<DenseMatrix> params{w};
    const double err = grad_check(
        [](Tape& t, std::span<const NodeId> ids) {
            return t.sum(t.hadamard(ids[0], ids[0]));
        },
        params, 1e-5);
    CHECK(err <= 1e-7);
}

TEST_CASE("affine: row-broadcast bias and its gradient") {
    Tape t;
    const NodeId x = t.leaf(DenseMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}}));
    const NodeId w = t.leaf(DenseMatrix::from_rows({{2, 0, 0}, {0, 3, 0}}));
    const NodeId b = t.leaf(DenseMatrix::from_rows({{1, 1, 1}}));
    const NodeId y = t.affine(x, w, b);
    CHECK(t.value(y)(0, 0) == doctest::Approx(3.0));
    CHECK(t.value(y)(2, 1) == doctest::Approx(4.0));
    CHECK(t.value(y)(1, 2) == doctest::Approx(1.0));
    t.backward(t.sum(y));
    CHECK(max_abs_diff(t.grad(b), DenseMatrix(1, 3, 3.0)) == 0.0);  // column sums
}

TEST_CASE("concat_cols: layout and gradient routing") {
    Tape t;
    const NodeId a = t.leaf(DenseMatrix::from_rows({{1}, {2}}));
    const NodeId b = t.leaf(DenseMatrix::from_rows({{3, 4}, {5, 6}}));
    const NodeId z = t.concat_cols(std::vector<NodeId>{a, b});
    CHECK(t.value(z).cols() == 3);
    CHECK(t.value(z)(1, 2) == 6.0);
    const NodeId mask = t.leaf(DenseMatrix::from_rows({{1, 0, 0}, {1, 0, 0}}));
    t.backward(t.sum(t.hadamard(z, mask)));
    CHECK(max_abs_diff(t.grad(a), DenseMatrix(2, 1, 1.0)) == 0.0);
    CHECK(t.grad(b).frobenius_norm() == 0.0);
}

TEST_CASE("mean_squared_error node and softmax cross-entropy basics") {
    Tape t;
    const NodeId a = t.leaf(DenseMatrix::from_rows({{0, 0}}));
    const NodeId b = t.leaf(DenseMatrix::from_rows({{1, 1}}));
    CHECK(t.value(t.mean_squared_error(a, b))(0, 0) == doctest::Approx(1.0));
    CHECK(t.value(t.mean_squared_error(a, a))(0, 0) == 0.0);

    // Strongly peaked correct logits drive CE towards zero.
    Tape t2;
    const NodeId logits =
        t2.leaf(DenseMatrix::from_rows({{30.0, 0.0}, {0.0, 30.0}}));
    const NodeId ce = t2.softmax_cross_entropy(logits, {0, 1});
    CHECK(t2.value(ce)(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(t2.value(ce)(0, 0) >= 0.0);

    CHECK_THROWS_AS(t2.softmax_cross_entropy(logits, {0}), ContractError);
    CHECK_THROWS_AS(t2.softmax_cross_entropy(logits, {0, 2}), ContractError);
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
    Rng rng(17);
    DenseMatrix logits = random_matrix(rng, 5, 3);
    std::vector<DenseMatrix> params{logits};
    const double err = grad_check(
        [](Tape& t, std::span<const NodeId> ids) {
            return t.softmax_cross_entropy(ids[0], {0, 2, 1, 1, 0});
        },
        params, 1e-5);
    CHECK(err <= 1e-6);
}

TEST_CASE("tape determinism: identical inputs give identical bits") {
    auto run = [] {
        Rng rng(1234);
        Tape t;
        const NodeId x = t.leaf(random_matrix(rng, 6, 3));
        const NodeId g = t.gaussian_gram(x, 1.0);
        const NodeId loss = t.spectral_scalar(g, SpectralFn::kPower, 2.0);
        t.backward(loss);
        return std::pair{t.value(loss)(0, 0), t.grad(x)};
    };
    const auto [v1, g1] = run();
    const auto [v2, g2] = run();
    CHECK(v1 == v2);
    CHECK(g1 == g2);
}
