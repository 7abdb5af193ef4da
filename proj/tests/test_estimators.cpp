#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cumi/discrete.hpp"
#include "cumi/eig.hpp"
#include "cumi/estimators.hpp"
#include "cumi/rng.hpp"

using namespace cumi;
using namespace cumi::info;

namespace {

DenseMatrix column(std::initializer_list<double> vals) {
    DenseMatrix m(vals.size(), 1);
    std::size_t i = 0;
    for (double v : vals) m(i++, 0) = v;
    return m;
}

DenseMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                          double hi = 1.0) {
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

NormalizedGram all_ones_gram(std::size_t n) {
    return make_normalized_gram(DenseMatrix(n, n, 1.0 / static_cast<double>(n)));
}

NormalizedGram identity_gram(std::size_t n) {
    return make_normalized_gram(scale(DenseMatrix::identity(n), 1.0 / static_cast<double>(n)));
}

// Independent route for α = 2 on a unit-trace gram: H₂ = −log₂(Σ A_ij²),
// evaluated by direct summation (no eigendecomposition).
double h2_by_direct_summation(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
    return -std::log2(s);
}

}  // namespace

TEST_CASE("median_bandwidth: closed-form cases and degenerate fallback") {
    CHECK(median_bandwidth(column({0.0, 2.0})) == doctest::Approx(2.0));
    CHECK(median_bandwidth(column({0.0, 1.0, 2.0})) == doctest::Approx(1.0));
    CHECK(median_bandwidth(DenseMatrix(4, 2, 3.14)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(median_bandwidth(DenseMatrix(1, 2)), ContractError);
}

TEST_CASE("gaussian_gram: diagonal, identical rows, direct kernel oracle") {
    Rng rng(2);
    const DenseMatrix x = random_matrix(rng, 5, 3);
    const NormalizedGram a = gaussian_gram(x, 0.7);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.a(i, i) == doctest::Approx(0.2));
    CHECK(a.a.trace() == doctest::Approx(1.0));

    const NormalizedGram same = gaussian_gram(DenseMatrix(4, 2, 1.25), 1.0);
    CHECK(max_abs_diff(same.a, DenseMatrix(4, 4, 0.25)) <= 1e-15);

    // X = {0,1,2} in 1-D with σ = 1: off-diagonals e^{-1/2}/3 and e^{-2}/3.
    const NormalizedGram g = gaussian_gram(column({0.0, 1.0, 2.0}), 1.0);
    CHECK(g.a(0, 1) == doctest::Approx(std::exp(-0.5) / 3.0).epsilon(1e-12));
    CHECK(g.a(1, 2) == doctest::Approx(std::exp(-0.5) / 3.0).epsilon(1e-12));
    CHECK(g.a(0, 2) == doctest::Approx(std::exp(-2.0) / 3.0).epsilon(1e-12));
    CHECK(g.a(0, 1) == doctest::Approx(0.20218).epsilon(1e-4));
    CHECK(g.a(0, 2) == doctest::Approx(0.04511).epsilon(1e-3));

    DenseMatrix bad(2, 1);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(gaussian_gram(bad, 1.0), NumericError);
    CHECK_THROWS_AS(gaussian_gram(x, 0.0), ContractError);
}

TEST_CASE("renyi_entropy: equal spectrum, degenerate spectrum, alpha domain") {
    for (double alpha : {0.5, 1.01, 2.0}) {
        CHECK(renyi_entropy(identity_gram(4), alpha) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(std::fabs(renyi_entropy(all_ones_gram(4), alpha)) <= 1e-9);
    }
    CHECK_THROWS_AS(renyi_entropy(identity_gram(4), 1.0), ContractError);
    CHECK_THROWS_AS(renyi_entropy(identity_gram(4), -2.0), ContractError);
}

TEST_CASE("renyi_entropy: direct-summation oracle for alpha=2 on X={0,1,2}") {
    const NormalizedGram g = gaussian_gram(column({0.0, 1.0, 2.0}), 1.0);
    const double oracle = h2_by_direct_summation(g.a);
    const double impl = renyi_entropy(g, 2.0);
    CHECK(impl == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(impl == doctest::Approx(0.99739).epsilon(1e-4));
}

TEST_CASE("joint_entropy: absorption, identity pair, direct oracle") {
    const NormalizedGram g = gaussian_gram(column({0.0, 1.0, 2.0}), 1.0);
    const std::vector<NormalizedGram> with_ones{g, all_ones_gram(3)};
    CHECK(joint_entropy(with_ones, 1.01) ==
          doctest::Approx(renyi_entropy(g, 1.01)).epsilon(1e-9));

    const std::vector<NormalizedGram> ii{identity_gram(4), identity_gram(4)};
    CHECK(joint_entropy(ii, 2.0) == doctest::Approx(2.0).epsilon(1e-9));

    // Joint of the grams from X={0,1,2}, Y={0,2,4}: renormalized Hadamard,
    // then the α=2 direct-summation route.
    const NormalizedGram gy = gaussian_gram(column({0.0, 2.0, 4.0}), 1.0);
    DenseMatrix prod = hadamard(g.a, gy.a);
    prod.scale_in_place(1.0 / prod.trace());
    const double oracle = h2_by_direct_summation(prod);
    const std::vector<NormalizedGram> pair{g, gy};
    CHECK(joint_entropy(pair, 2.0) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(joint_entropy(pair, 2.0) == doctest::Approx(1.572059302764).epsilon(1e-9));

    const std::vector<NormalizedGram> mismatched{g, identity_gram(4)};
    CHECK_THROWS_AS(joint_entropy(mismatched, 2.0), DimensionError);
}

TEST_CASE("total_correlation: constant absorption, deterministic copy, golden") {
    const NormalizedGram g = gaussian_gram(column({0.3, -1.0, 2.0, 0.9}), 1.0);
    const std::vector<NormalizedGram> with_ones{g, all_ones_gram(4)};
    CHECK(std::fabs(total_correlation(with_ones, 1.01)) <= 1e-9);

    const std::vector<NormalizedGram> ii{identity_gram(4), identity_gram(4)};
    CHECK(total_correlation(ii, 1.01) == doctest::Approx(2.0).epsilon(1e-9));

    // Two independently drawn standard-normal samples; component entropies
    // are cross-checked by the α=2 direct-summation route, the TC value is
    // frozen from the first verified run.
    Rng rng(314159);
    DenseMatrix x(100, 1), y(100, 1);
    for (std::size_t i = 0; i < 100; ++i) x(i, 0) = rng.normal();
    for (std::size_t i = 0; i < 100; ++i) y(i, 0) = rng.normal();
    const NormalizedGram gx = gaussian_gram(x, median_bandwidth(x));
    const NormalizedGram gy = gaussian_gram(y, median_bandwidth(y));
    CHECK(renyi_entropy(gx, 2.0) ==
          doctest::Approx(h2_by_direct_summation(gx.a)).epsilon(1e-9));
    CHECK(renyi_entropy(gy, 2.0) ==
          doctest::Approx(h2_by_direct_summation(gy.a)).epsilon(1e-9));
    const std::vector<NormalizedGram> both{gx, gy};
    const double tc = total_correlation(both, 2.0);
    CHECK(tc >= -1e-8);
    CHECK(tc < 0.2);  // independent samples: small dependence estimate
    CHECK(tc == doctest::Approx(0.053276865769).epsilon(1e-6));  // frozen golden
}

TEST_CASE("hsic: constant variable, self-dependence, 2x2 closed form") {
    Rng rng(8);
    const DenseMatrix x = random_matrix(rng, 6, 2);
    CHECK(std::fabs(hsic(x, DenseMatrix(6, 1, 2.5), 1.0, 1.0)) <= 1e-15);
    CHECK(hsic(x, x, 0.8, 0.8) >= 0.0);

    // x = y = {0,1}, σ = 1: HSIC = 4a² with a = (1−e^{-1/2})/2.
    const DenseMatrix z = column({0.0, 1.0});
    const double a = (1.0 - std::exp(-0.5)) / 2.0;
    CHECK(hsic(z, z, 1.0, 1.0) == doctest::Approx(4.0 * a * a).epsilon(1e-12));
    CHECK(hsic(z, z, 1.0, 1.0) == doctest::Approx(0.15480).epsilon(1e-3));

    CHECK_THROWS_AS(hsic(x, DenseMatrix(5, 1), 1.0, 1.0), DimensionError);
}

TEST_CASE("entropy bounds and permutation invariance") {
    Rng rng(21);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform_int(0, 8));
        const DenseMatrix x = random_matrix(rng, n, 2, -2.0, 2.0);
        const double sigma = median_bandwidth(x);
        const NormalizedGram g = gaussian_gram(x, sigma);
        for (double alpha : {0.5, 1.01, 2.0}) {
            const double h = renyi_entropy(g, alpha);
            CHECK(h >= 0.0);
            CHECK(h <= std::log2(static_cast<double>(n)) + 1e-9);
        }

        // Same row permutation applied to the samples.
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        DenseMatrix xp(n, 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 2; ++j) xp(i, j) = x(perm[i], j);
        const NormalizedGram gp = gaussian_gram(xp, sigma);
        CHECK(std::fabs(renyi_entropy(g, 1.01) - renyi_entropy(gp, 1.01)) <= 1e-10);

        const DenseMatrix y = random_matrix(rng, n, 1, -2.0, 2.0);
        DenseMatrix yp(n, 1);
        for (std::size_t i = 0; i < n; ++i) yp(i, 0) = y(perm[i], 0);
        const NormalizedGram gy = gaussian_gram(y, 1.0);
        const NormalizedGram gyp = gaussian_gram(yp, 1.0);
        const std::vector<NormalizedGram> ab{g, gy};
        const std::vector<NormalizedGram> abp{gp, gyp};
        CHECK(std::fabs(total_correlation(ab, 1.01) - total_correlation(abp, 1.01)) <=
              1e-10);
        CHECK(std::fabs(hsic(x, y, sigma, 1.0) - hsic(xp, yp, sigma, 1.0)) <= 1e-10);
    }
}

TEST_CASE("total correlation: argument-order symmetry and nonnegativity") {
    Rng rng(77);
    for (int rep = 0; rep < 8; ++rep) {
        const DenseMatrix x = random_matrix(rng, 7, 2);
        const DenseMatrix y = random_matrix(rng, 7, 3);
        const DenseMatrix z = random_matrix(rng, 7, 1);
        const NormalizedGram gx = gaussian_gram(x, 1.0);
        const NormalizedGram gy = gaussian_gram(y, 1.3);
        const NormalizedGram gz = gaussian_gram(z, 0.9);
        const std::vector<NormalizedGram> abc{gx, gy, gz};
        const std::vector<NormalizedGram> cab{gz, gx, gy};
        const std::vector<NormalizedGram> bca{gy, gz, gx};
        const double t0 = total_correlation(abc, 1.01);
        CHECK(std::fabs(t0 - total_correlation(cab, 1.01)) <= 1e-12);
        CHECK(std::fabs(t0 - total_correlation(bca, 1.01)) <= 1e-12);
        CHECK(t0 >= -1e-8);
    }
}

TEST_CASE("gaussian grams are PSD up to roundoff") {
    Rng rng(64);
    for (int rep = 0; rep < 8; ++rep) {
        const DenseMatrix x = random_matrix(rng, 12, 3, -2.0, 2.0);
        const NormalizedGram g = gaussian_gram(x, median_bandwidth(x));
        const EigenPair e = sym_eig(g.a);
        CHECK(e.values.back() >= -1e-10);
        CHECK(e.values.front() <= 1.0 + 1e-10);
    }
}

TEST_CASE("normalized gram validation") {
    CHECK_THROWS_AS(make_normalized_gram(DenseMatrix(2, 3)), DimensionError);
    CHECK_THROWS_AS(make_normalized_gram(DenseMatrix::identity(3)), ContractError);
    DenseMatrix asym = scale(DenseMatrix::identity(2), 0.5);
    asym(0, 1) = 0.1;
    CHECK_THROWS_AS(make_normalized_gram(asym), ContractError);
}

TEST_CASE("discrete oracle: fair bit and the information decomposition") {
    // fair bit
    const DiscretePmf bit({2}, {0.5, 0.5});
    const std::vector<std::size_t> ax0{0};
    CHECK(bit.entropy(ax0) == doctest::Approx(1.0).epsilon(1e-15));

    // Axes: (C, U1, U2). Z1 = (C,U1) -> axes {0,1}; Z2 = (C,U2) -> axes {0,2}.
    const std::vector<std::size_t> z1{0, 1};
    const std::vector<std::size_t> z2{0, 2};

    // C fair bit, U1 = U2 fair bit independent of C: I(Z1;Z2) = 1 + 1 = 2.
    std::vector<double> copy_probs(8, 0.0);
    for (int c = 0; c < 2; ++c)
        for (int u = 0; u < 2; ++u) copy_probs[static_cast<std::size_t>(c * 4 + u * 2 + u)] = 0.25;
    const DiscretePmf coupled({2, 2, 2}, copy_probs);
    CHECK(coupled.mutual_information(z1, z2) == doctest::Approx(2.0).epsilon(1e-12));

    // U1 independent of U2: I(Z1;Z2) = H(C) = 1 bit.
    std::vector<double> indep_probs(8, 0.125);
    const DiscretePmf indep({2, 2, 2}, indep_probs);
    CHECK(indep.mutual_information(z1, z2) == doctest::Approx(1.0).epsilon(1e-12));

    // I(Z1;Z2) = H(C) + I(U1;U2) for 20 random constructions with C
    // independent of (U1,U2).
    Rng rng(556);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t nc = 2 + static_cast<std::size_t>(rng.uniform_int(0, 1));
        const std::size_t n1 = 2 + static_cast<std::size_t>(rng.uniform_int(0, 1));
        const std::size_t n2 = 2 + static_cast<std::size_t>(rng.uniform_int(0, 1));
        std::vector<double> pc(nc);
        double sc = 0.0;
        for (double& p : pc) sc += (p = rng.uniform(0.05, 1.0));
        for (double& p : pc) p /= sc;
        std::vector<double> pu(n1 * n2);
        double su = 0.0;
        for (double& p : pu) su += (p = rng.uniform(0.05, 1.0));
        for (double& p : pu) p /= su;

        std::vector<double> probs(nc * n1 * n2);
        for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t u1 = 0; u1 < n1; ++u1)
                for (std::size_t u2 = 0; u2 < n2; ++u2)
                    probs[(c * n1 + u1) * n2 + u2] = pc[c] * pu[u1 * n2 + u2];
        const DiscretePmf pmf({nc, n1, n2}, probs);

        const std::vector<std::size_t> axc{0};
        const std::vector<std::size_t> axu1{1};
        const std::vector<std::size_t> axu2{2};
        const double lhs = pmf.mutual_information(z1, z2);
        const double rhs = pmf.entropy(axc) + pmf.mutual_information(axu1, axu2);
        CHECK(std::fabs(lhs - rhs) <= 1e-12);
    }
}

TEST_CASE("differentiable entropy: value parity and finite-difference gradients") {
    Rng rng(4242);
    DenseMatrix x = random_matrix(rng, 6, 2, -1.5, 1.5);

    // Node route equals the plain route on the same gram.
    Tape t;
    const NodeId xn = t.leaf(x);
    const NodeId gn = t.gaussian_gram(xn, 1.0);
    const NodeId hn = renyi_entropy_node(t, gn, 1.01);
    const NormalizedGram g = gaussian_gram(x, 1.0);
    CHECK(t.value(hn)(0, 0) == doctest::Approx(renyi_entropy(g, 1.01)).epsilon(1e-12));

    for (double alpha : {1.01, 2.0}) {
        std::vector<DenseMatrix> params{x};
        const double err = grad_check(
            [alpha](Tape& tape, std::span<const NodeId> ids) {
                const NodeId gram = tape.gaussian_gram(ids[0], 1.0);
                return renyi_entropy_node(tape, gram, alpha);
            },
            params, 1e-5);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("differentiable total correlation: parity and gradients") {
    Rng rng(987);
    DenseMatrix c = random_matrix(rng, 8, 1, -1.2, 1.2);
    DenseMatrix u1 = random_matrix(rng, 8, 1, -1.2, 1.2);
    DenseMatrix u2 = random_matrix(rng, 8, 2, -1.2, 1.2);

    Tape t;
    std::vector<NodeId> grams{t.gaussian_gram(t.leaf(c), 1.0),
                              t.gaussian_gram(t.leaf(u1), 1.0),
                              t.gaussian_gram(t.leaf(u2), 1.0)};
    const NodeId tc_node = total_correlation_node(t, grams, 1.01);
    const std::vector<NormalizedGram> plain{gaussian_gram(c, 1.0),
                                            gaussian_gram(u1, 1.0),
                                            gaussian_gram(u2, 1.0)};
    CHECK(t.value(tc_node)(0, 0) ==
          doctest::Approx(total_correlation(plain, 1.01)).epsilon(1e-12));

    std::vector<DenseMatrix> params{c, u1, u2};
    const double err = grad_check(
        [](Tape& tape, std::span<const NodeId> ids) {
            std::vector<NodeId> gs;
            for (NodeId id : ids) gs.push_back(tape.gaussian_gram(id, 1.0));
            return total_correlation_node(tape, gs, 1.01);
        },
        params, 1e-5);
    CHECK(err <= 1e-4);
}
