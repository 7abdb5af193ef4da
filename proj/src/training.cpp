#include "cumi/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cumi/kernels.hpp"
#include "cumi/rng.hpp"

namespace cumi::train {

namespace {

double bandwidth_for(const TrainConfig& cfg, const DenseMatrix& values) {
    if (cfg.bandwidth_mode == info::BandwidthMode::kFixed) return cfg.fixed_sigma;
    return info::median_bandwidth(values);
}

MultiViewBatch gather_batch(const io::MultiViewDataset& ds,
                            std::span<const std::size_t> rows) {
    MultiViewBatch b;
    for (const DenseMatrix& view : ds.views) {
        DenseMatrix m(rows.size(), view.cols());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < view.cols(); ++j) m(i, j) = view(rows[i], j);
        b.views.push_back(std::move(m));
    }
    if (!ds.labels.empty())
        for (std::size_t r : rows) b.labels.push_back(ds.labels[r]);
    return b;
}

struct PlainForward {
    DenseMatrix c;
    std::vector<DenseMatrix> u;
    std::vector<DenseMatrix> xhat;
    DenseMatrix logits;  // empty when no classifier
};

PlainForward plain_forward(const CumiModel& m, std::span<const DenseMatrix> views,
                           std::size_t donor) {
    PlainForward f;
    f.c = encode_common(m, donor, views[donor]);
    for (std::size_t v = 0; v < m.view_count(); ++v)
        f.u.push_back(encode_unique(m, v, views[v]));
    for (std::size_t v = 0; v < m.view_count(); ++v)
        f.xhat.push_back(decode(m, v, f.c, f.u[v]));
    if (m.classifier) {
        DenseMatrix z(f.c.rows(), m.z_width());
        for (std::size_t i = 0; i < z.rows(); ++i) {
            std::size_t off = 0;
            for (std::size_t j = 0; j < f.c.cols(); ++j) z(i, off++) = f.c(i, j);
            for (std::size_t v = 0; v < m.view_count(); ++v)
                for (std::size_t j = 0; j < f.u[v].cols(); ++j)
                    z(i, off++) = f.u[v](i, j);
        }
        f.logits = matmul(z, m.classifier->w);
        for (std::size_t i = 0; i < f.logits.rows(); ++i)
            for (std::size_t j = 0; j < f.logits.cols(); ++j)
                f.logits(i, j) += m.classifier->b(0, j);
    }
    return f;
}

double softmax_ce_value(const DenseMatrix& logits, std::span<const int> labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j)
            z += std::exp(logits(i, j) - mx);
        total += mx + std::log(z) - logits(i, static_cast<std::size_t>(labels[i]));
    }
    return total / static_cast<double>(logits.rows());
}

Metrics metrics_from_predictions(std::span<const int> truth, std::span<const int> pred,
                                 int n_classes) {
    Metrics out;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
    out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

    double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool is_c = truth[i] == c;
            const bool said_c = pred[i] == c;
            tp += is_c && said_c;
            fp += !is_c && said_c;
            fn += is_c && !said_c;
        }
        const double prec = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rec = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double f1 =
            (prec + rec > 0.0) ? 2.0 * prec * rec / (prec + rec) : 0.0;
        prec_sum += prec;
        rec_sum += rec;
        f1_sum += f1;
    }
    out.precision = prec_sum / static_cast<double>(n_classes);
    out.recall = rec_sum / static_cast<double>(n_classes);
    out.f1 = f1_sum / static_cast<double>(n_classes);
    return out;
}

std::vector<int> argmax_rows(const DenseMatrix& logits) {
    std::vector<int> pred(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        pred[i] = static_cast<int>(best);
    }
    return pred;
}

std::vector<std::size_t> capped_head(std::span<const std::size_t> rows,
                                     std::size_t cap) {
    const std::size_t n = std::min(rows.size(), cap);
    return {rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n)};
}

void require_all_finite(const EpochMetrics& em) {
    auto ok = [](double v) { return std::isfinite(v); };
    bool fine = ok(em.ce) && ok(em.h_c) && ok(em.tc) && ok(em.train.accuracy) &&
                ok(em.train.precision) && ok(em.train.recall) && ok(em.train.f1);
    for (double v : em.mse) fine = fine && ok(v);
    for (double v : em.hsic) fine = fine && ok(v);
    for (double v : em.consensus_mse) fine = fine && ok(v);
    if (!fine)
        throw NumericError("epoch metrics contain non-finite values (epoch " +
                           std::to_string(em.epoch) + ")");
}

}  // namespace

void validate_config(const TrainConfig& cfg) {
    info::validate_alpha(cfg.alpha);
    if (!(cfg.lr > 0.0) && cfg.lr != 0.0)
        throw ContractError("train config: lr must be >= 0");
    if (cfg.epochs < 1) throw ContractError("train config: epochs must be >= 1");
    if (cfg.batch_size < 2) throw ContractError("train config: batch_size must be >= 2");
    if (cfg.beta < 0.0 || cfg.gamma < 0.0)
        throw ContractError("train config: beta and gamma must be >= 0");
    if (cfg.bandwidth_mode == info::BandwidthMode::kFixed && !(cfg.fixed_sigma > 0.0))
        throw ContractError("train config: fixed sigma must be positive");
}

double mse_value(const DenseMatrix& x, const DenseMatrix& xhat) {
    require_same_shape(x, xhat, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.data()[i] - xhat.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

NodeId compute_loss(Tape& t, const CumiModel& m, const ModelNodes& nodes,
                    const MultiViewBatch& batch, std::size_t donor,
                    const TrainConfig& cfg, LossParts* parts) {
    if (batch.views.size() != m.view_count())
        throw ContractError("compute_loss: view count mismatch");
    const std::size_t n = batch.views[0].rows();
    if (n < 2) throw ContractError("compute_loss: batch must hold at least 2 samples");

    std::vector<NodeId> x_nodes;
    for (const DenseMatrix& xv : batch.views) x_nodes.push_back(t.leaf(xv));
    const ForwardNodes f = forward(t, m, nodes, x_nodes, donor);

    LossParts lp;
    NodeId loss = -1;
    for (std::size_t v = 0; v < m.view_count(); ++v) {
        const NodeId term = t.mean_squared_error(x_nodes[v], f.xhat[v]);
        lp.mse.push_back(t.value(term)(0, 0));
        loss = (loss < 0) ? term : t.add(loss, term);
    }
    if (!batch.labels.empty() && m.classifier) {
        const NodeId ce = t.softmax_cross_entropy(f.logits, batch.labels);
        lp.ce = t.value(ce)(0, 0);
        loss = t.add(loss, ce);
    }

    if (cfg.beta != 0.0 || cfg.gamma != 0.0) {
        const double sigma_c = bandwidth_for(cfg, t.value(f.c));
        const NodeId gram_c = t.gaussian_gram(f.c, sigma_c);
        if (cfg.beta != 0.0) {
            const NodeId h_c = info::renyi_entropy_node(t, gram_c, cfg.alpha);
            lp.h_c = t.value(h_c)(0, 0);
            loss = t.add(loss, t.scale(h_c, -cfg.beta));
        }
        if (cfg.gamma != 0.0) {
            std::vector<NodeId> grams{gram_c};
            for (std::size_t v = 0; v < m.view_count(); ++v)
                grams.push_back(
                    t.gaussian_gram(f.u[v], bandwidth_for(cfg, t.value(f.u[v]))));
            const NodeId tc = info::total_correlation_node(t, grams, cfg.alpha);
            lp.tc = t.value(tc)(0, 0);
            loss = t.add(loss, t.scale(tc, cfg.gamma));
        }
    }
    if (parts) *parts = lp;
    return loss;
}

TrainResult train(CumiModel& m, const io::MultiViewDataset& ds, const TrainConfig& cfg) {
    validate_config(cfg);
    if (ds.views.size() != m.view_count())
        throw ContractError("train: dataset/model view count mismatch");
    const std::vector<std::size_t> train_rows = io::split_indices(ds, false);
    if (train_rows.size() < 2)
        throw ContractError("train: need at least one batch of size >= 2");
    const std::vector<std::size_t> test_rows = io::split_indices(ds, true);

    std::vector<DenseMatrix*> params = m.parameters();
    Rng rng(cfg.seed);
    TrainResult result;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = train_rows;
        rng.shuffle(order);

        for (std::size_t start = 0, batch_idx = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size), ++batch_idx) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t donor = rng.uniform_index(m.view_count());
            if (stop - start < 2) continue;  // drop a trailing 1-sample batch
            const MultiViewBatch batch =
                gather_batch(ds, std::span(order).subspan(start, stop - start));

            Tape t;
            const ModelNodes nodes = bind_model(t, m);
            const NodeId loss = compute_loss(t, m, nodes, batch, donor, cfg);
            const double loss_value = t.value(loss)(0, 0);
            if (!std::isfinite(loss_value))
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_idx));
            t.backward(loss);
            for (std::size_t p = 0; p < params.size(); ++p)
                params[p]->axpy_in_place(-cfg.lr, t.grad(nodes.ordered[p]));
            for (const DenseMatrix* p : params)
                if (!p->all_finite())
                    throw NumericError(
                        "training diverged: non-finite parameters after epoch " +
                        std::to_string(epoch) + ", batch " + std::to_string(batch_idx));
        }

        // Per-epoch diagnostics on the training split (donor = view 1).
        EpochMetrics em;
        em.epoch = epoch;
        const MultiViewBatch full = gather_batch(ds, train_rows);
        const PlainForward f = plain_forward(m, full.views, 0);
        for (std::size_t v = 0; v < m.view_count(); ++v)
            em.mse.push_back(mse_value(full.views[v], f.xhat[v]));
        if (!full.labels.empty() && m.classifier) {
            em.ce = softmax_ce_value(f.logits, full.labels);
            em.train = metrics_from_predictions(full.labels, argmax_rows(f.logits),
                                                m.n_classes);
        }

        const std::vector<std::size_t> diag_rows =
            capped_head(train_rows, cfg.diagnostics_cap);
        const MultiViewBatch diag = gather_batch(ds, diag_rows);
        const Independence ind =
            independence_curves(m, diag.views, cfg, cfg.diagnostics_cap);
        em.tc = ind.tc;
        em.hsic = ind.hsic;
        const DenseMatrix c_diag = encode_common(m, 0, diag.views[0]);
        em.h_c = info::renyi_entropy(
            info::gaussian_gram(c_diag, info::median_bandwidth(c_diag)), cfg.alpha);
        em.consensus_mse = consensus_mse(m, diag.views, cfg.diagnostics_cap);

        if (!test_rows.empty() && !ds.labels.empty() && m.classifier)
            em.heldout = evaluate_rows(m, ds, test_rows);

        require_all_finite(em);
        result.epochs.push_back(std::move(em));
    }
    return result;
}

Metrics evaluate_rows(const CumiModel& m, const io::MultiViewDataset& ds,
                      std::span<const std::size_t> rows) {
    if (ds.labels.empty() || !m.classifier)
        throw ContractError("evaluate: labels and a classifier head are required");
    if (rows.empty()) throw ContractError("evaluate: empty row set");
    const MultiViewBatch batch = gather_batch(ds, rows);
    const PlainForward f = plain_forward(m, batch.views, 0);
    return metrics_from_predictions(batch.labels, argmax_rows(f.logits), m.n_classes);
}

Metrics evaluate(const CumiModel& m, const io::MultiViewDataset& ds, bool on_test_split) {
    const std::vector<std::size_t> rows = io::split_indices(ds, on_test_split);
    return evaluate_rows(m, ds, rows);
}

std::vector<double> consensus_mse(const CumiModel& m,
                                  std::span<const DenseMatrix> views, std::size_t cap) {
    std::vector<DenseMatrix> capped;
    for (const DenseMatrix& v : views) {
        const std::size_t n = std::min(v.rows(), cap);
        DenseMatrix head(n, v.cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) head(i, j) = v(i, j);
        capped.push_back(std::move(head));
    }
    const std::vector<DenseMatrix> all = encode_all_common(m, capped);
    std::vector<double> out;
    for (const DenseMatrix& ci : all) out.push_back(mse_value(all[0], ci));
    return out;
}

Independence independence_curves(const CumiModel& m, std::span<const DenseMatrix> views,
                                 const TrainConfig& cfg, std::size_t cap) {
    std::vector<DenseMatrix> capped;
    for (const DenseMatrix& v : views) {
        const std::size_t n = std::min(v.rows(), cap);
        DenseMatrix head(n, v.cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) head(i, j) = v(i, j);
        capped.push_back(std::move(head));
    }

    // Monitoring always uses the median heuristic so that curve values stay
    // comparable across epochs as latent scales drift; cfg.bandwidth_mode
    // governs the loss only.
    const DenseMatrix c = encode_common(m, 0, capped[0]);
    const double sigma_c = info::median_bandwidth(c);
    std::vector<info::NormalizedGram> grams;
    grams.push_back(info::gaussian_gram(c, sigma_c));

    Independence out;
    for (std::size_t v = 0; v < m.view_count(); ++v) {
        const DenseMatrix u = encode_unique(m, v, capped[v]);
        const double sigma_u = info::median_bandwidth(u);
        grams.push_back(info::gaussian_gram(u, sigma_u));
        out.hsic.push_back(info::hsic(c, u, sigma_c, sigma_u));
    }
    out.tc = info::total_correlation(grams, cfg.alpha);
    return out;
}

void write_metrics_csv(const std::string& path, std::span<const EpochMetrics> rows,
                       std::size_t view_count) {
    std::string out = "epoch,ce";
    for (std::size_t v = 1; v <= view_count; ++v) out += ",mse_" + std::to_string(v);
    out += ",h_c,tc";
    for (std::size_t v = 1; v <= view_count; ++v) out += ",hsic_" + std::to_string(v);
    for (std::size_t v = 1; v <= view_count; ++v) out += ",cmse_" + std::to_string(v);
    out += ",acc,prec,rec,f1\n";

    char buf[32];
    auto push = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += ',';
        out += buf;
    };
    for (const EpochMetrics& em : rows) {
        out += std::to_string(em.epoch);
        push(em.ce);
        for (double v : em.mse) push(v);
        push(em.h_c);
        push(em.tc);
        for (double v : em.hsic) push(v);
        for (double v : em.consensus_mse) push(v);
        push(em.train.accuracy);
        push(em.train.precision);
        push(em.train.recall);
        push(em.train.f1);
        out += '\n';
    }
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    f << out;
}

}  // namespace cumi::train
