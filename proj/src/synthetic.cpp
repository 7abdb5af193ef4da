#include "cumi/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "cumi/eig.hpp"
#include "cumi/rng.hpp"

namespace cumi::synth {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr std::size_t kViewDim = 20;

std::vector<double> column_of(const DenseMatrix& m) {
    std::vector<double> v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
    return v;
}

}  // namespace

SyntheticData generate(std::uint64_t seed, std::size_t n) {
    if (n < 2) throw ContractError("synthetic generate: need n >= 2");
    Rng rng(seed);

    GroundTruth truth;
    truth.t.resize(n);
    for (double& t : truth.t) t = rng.uniform(-1.0, 1.0);
    truth.c.resize(n);
    truth.u1.resize(n);
    truth.u2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        truth.c[i] = std::sin(2.0 * kPi * truth.t[i]);
        truth.u1[i] = std::cos(kPi * kPi * truth.t[i]);
        truth.u2[i] = std::cos(std::sqrt(5.0) * kPi * truth.t[i]);
    }
    truth.f1 = DenseMatrix(kViewDim, 2);
    truth.f2 = DenseMatrix(kViewDim, 2);
    for (std::size_t i = 0; i < truth.f1.size(); ++i)
        truth.f1.data()[i] = rng.normal();
    for (std::size_t i = 0; i < truth.f2.size(); ++i)
        truth.f2.data()[i] = rng.normal();

    SyntheticData d;
    d.x1 = DenseMatrix(n, kViewDim);
    d.x2 = DenseMatrix(n, kViewDim);
    for (std::size_t i = 0; i < n; ++i) {
        const double noise = 0.02 * std::sin(3.6 * kPi * truth.t[i]);
        for (std::size_t j = 0; j < kViewDim; ++j) {
            d.x1(i, j) =
                truth.f1(j, 0) * truth.c[i] + truth.f1(j, 1) * truth.u1[i] + noise;
            d.x2(i, j) =
                truth.f2(j, 0) * truth.c[i] + truth.f2(j, 1) * truth.u2[i] + noise;
        }
    }
    d.truth = std::move(truth);
    return d;
}

double alignment(std::span<const double> recovered, std::span<const double> truth) {
    if (recovered.size() != truth.size())
        throw DimensionError("alignment: length mismatch");
    const std::size_t n = truth.size();
    if (n < 3) throw ContractError("alignment: need at least 3 samples");

    double mr = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mr += recovered[i];
        mt += truth[i];
    }
    mr /= static_cast<double>(n);
    mt /= static_cast<double>(n);
    double srr = 0.0, stt = 0.0, srt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dr = recovered[i] - mr;
        const double dt = truth[i] - mt;
        srr += dr * dr;
        stt += dt * dt;
        srt += dr * dt;
    }
    if (stt <= 1e-30) throw ContractError("alignment: truth signal is constant");
    if (srr <= 1e-30) return 0.0;  // constant recovered vector
    return std::fabs(srt / std::sqrt(srr * stt));
}

SyntheticData apply_random_invertible_mixing(const SyntheticData& data,
                                             std::uint64_t seed) {
    Rng rng(seed);
    auto draw_invertible = [&rng]() {
        for (;;) {
            DenseMatrix m(kViewDim, kViewDim);
            for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
            // Gaussian matrices are almost surely invertible; verify through
            // the smallest eigenvalue of MᵀM and redraw on a degenerate draw.
            const EigenPair e = sym_eig(matmul_tn(m, m));
            if (e.values.back() > 1e-6) return m;
        }
    };
    const DenseMatrix m1 = draw_invertible();
    const DenseMatrix m2 = draw_invertible();
    SyntheticData out = data;
    out.x1 = matmul_nt(data.x1, m1);  // rows map as x -> M·x
    out.x2 = matmul_nt(data.x2, m2);
    return out;
}

SyntheticOutputs run_synthetic_on(const SyntheticData& data,
                                  const SyntheticConfig& cfg) {
    io::MultiViewDataset ds;
    ds.name = "synthetic";
    ds.view_names = {"view1", "view2"};
    ds.views = {data.x1, data.x2};
    io::standardize(ds);

    const std::vector<ViewSpec> specs{{kViewDim, 0}, {kViewDim, 1}};
    CumiModel model = init_model(specs, 0, cfg.seed, LatentDims{1, 1});

    train::TrainConfig tc;
    tc.alpha = cfg.alpha;
    tc.beta = cfg.beta;
    tc.gamma = cfg.gamma;
    tc.lr = cfg.lr;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.seed = cfg.seed;
    tc.bandwidth_mode = cfg.bandwidth_mode;
    tc.fixed_sigma = cfg.fixed_sigma;

    SyntheticOutputs out;
    out.data = data;
    out.training = train::train(model, ds, tc);

    out.c_hat_v1 = column_of(encode_common(model, 0, ds.views[0]));
    out.c_hat_v2 = column_of(encode_common(model, 1, ds.views[1]));
    out.u1_hat = column_of(encode_unique(model, 0, ds.views[0]));
    out.u2_hat = column_of(encode_unique(model, 1, ds.views[1]));

    out.c_alignment = {alignment(out.c_hat_v1, data.truth.c),
                       alignment(out.c_hat_v2, data.truth.c)};
    out.u_alignment = {alignment(out.u1_hat, data.truth.u1),
                       alignment(out.u2_hat, data.truth.u2)};
    out.u_cross_alignment = {alignment(out.u1_hat, data.truth.c),
                             alignment(out.u2_hat, data.truth.c)};

    const CcaResult cca = linear_cca(ds.views[0], ds.views[1], 1);
    out.cca_c_v1 = column_of(cca.x_proj);
    out.cca_c_v2 = column_of(cca.y_proj);
    out.cca_alignment = {alignment(out.cca_c_v1, data.truth.c),
                         alignment(out.cca_c_v2, data.truth.c)};
    return out;
}

SyntheticOutputs run_synthetic(const SyntheticConfig& cfg) {
    return run_synthetic_on(generate(cfg.seed, cfg.n), cfg);
}

void write_signals_csv(const SyntheticOutputs& out, const std::string& path) {
    const std::vector<double>& t = out.data.truth.t;
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });

    std::string body =
        "t,c_true,u1_true,u2_true,c_hat_v1,c_hat_v2,u1_hat,u2_hat,cca_c_v1,cca_c_v2\n";
    char buf[32];
    auto push = [&](double v, bool first = false) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        if (!first) body += ',';
        body += buf;
    };
    for (std::size_t i : order) {
        push(t[i], true);
        push(out.data.truth.c[i]);
        push(out.data.truth.u1[i]);
        push(out.data.truth.u2[i]);
        push(out.c_hat_v1[i]);
        push(out.c_hat_v2[i]);
        push(out.u1_hat[i]);
        push(out.u2_hat[i]);
        push(out.cca_c_v1[i]);
        push(out.cca_c_v2[i]);
        body += '\n';
    }
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    f << body;
}

void write_report_json(const SyntheticOutputs& out, const SyntheticConfig& cfg,
                       const std::string& path) {
    nlohmann::json j;
    j["config"] = {{"seed", cfg.seed},     {"n", cfg.n},
                   {"epochs", cfg.epochs}, {"alpha", cfg.alpha},
                   {"beta", cfg.beta},     {"gamma", cfg.gamma},
                   {"lr", cfg.lr},         {"batch_size", cfg.batch_size}};
    j["alignment"] = {
        {"c", {{"view1", out.c_alignment[0]}, {"view2", out.c_alignment[1]}}},
        {"u", {{"view1", out.u_alignment[0]}, {"view2", out.u_alignment[1]}}},
        {"u_vs_c",
         {{"view1", out.u_cross_alignment[0]}, {"view2", out.u_cross_alignment[1]}}},
        {"cca_c",
         {{"view1", out.cca_alignment[0]}, {"view2", out.cca_alignment[1]}}}};
    if (!out.training.epochs.empty()) {
        const train::EpochMetrics& first = out.training.epochs.front();
        const train::EpochMetrics& last = out.training.epochs.back();
        j["curves"] = {{"tc_first", first.tc},
                       {"tc_last", last.tc},
                       {"hsic_first", {first.hsic[0], first.hsic[1]}},
                       {"hsic_last", {last.hsic[0], last.hsic[1]}},
                       {"consensus_mse_first",
                        {first.consensus_mse[0], first.consensus_mse[1]}},
                       {"consensus_mse_last",
                        {last.consensus_mse[0], last.consensus_mse[1]}}};
    }
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    f << j.dump(1) << "\n";
}

}  // namespace cumi::synth
