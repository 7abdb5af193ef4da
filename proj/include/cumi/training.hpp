#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cumi/data_io.hpp"
#include "cumi/estimators.hpp"
#include "cumi/model.hpp"

namespace cumi::train {

struct TrainConfig {
    double alpha = 1.01;   // entropy order
    double beta = 0.01;    // weight on H(C)
    double gamma = 0.01;   // weight on TC
    double lr = 0.01;
    int epochs = 100;
    int batch_size = 100;
    std::uint64_t seed = 1;
    info::BandwidthMode bandwidth_mode = info::BandwidthMode::kMedian;
    double fixed_sigma = 1.0;
    // donor_policy: uniform per batch (the only policy).
    std::size_t diagnostics_cap = 512;
};

void validate_config(const TrainConfig& cfg);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EpochMetrics {
    int epoch = 0;
    double ce = 0.0;
    std::vector<double> mse;            // per view
    double h_c = 0.0;                   // bits
    double tc = 0.0;                    // bits
    std::vector<double> hsic;           // per view
    std::vector<double> consensus_mse;  // per view
    Metrics train;
    std::optional<Metrics> heldout;
};

struct LossParts {
    double ce = 0.0;
    std::vector<double> mse;
    double h_c = 0.0;
    double tc = 0.0;
};

// The combined objective on one minibatch:
//   CE + Σ_i MSE_i − β·H_α(A_c) + γ·TC_α(A_c, A_u1, …, A_uv).
// The CE term is dropped when the batch is unlabeled or the model has no
// classifier; H/TC terms are built only when their weights are nonzero.
// Bandwidths follow cfg on gradient-detached latent values. The batch must
// hold at least 2 samples.
NodeId compute_loss(Tape& t, const CumiModel& m, const ModelNodes& nodes,
                    const MultiViewBatch& batch, std::size_t donor,
                    const TrainConfig& cfg, LossParts* parts = nullptr);

double mse_value(const DenseMatrix& x, const DenseMatrix& xhat);

struct TrainResult {
    std::vector<EpochMetrics> epochs;
};

// Plain SGD over shuffled minibatches; donor drawn uniformly per batch.
// Fully deterministic for a given (seed, config, dataset). Per-epoch metrics
// are measured on the training split (held-out metrics added when a split
// exists). NumericError naming epoch/batch on divergence.
TrainResult train(CumiModel& m, const io::MultiViewDataset& ds, const TrainConfig& cfg);

// Argmax-logit predictions with macro-averaged precision/recall/F1; per-class
// divisions with zero denominators contribute 0. Evaluation uses donor = view 1.
Metrics evaluate_rows(const CumiModel& m, const io::MultiViewDataset& ds,
                      std::span<const std::size_t> rows);
Metrics evaluate(const CumiModel& m, const io::MultiViewDataset& ds, bool on_test_split);

// MSE between the reference common code C (view 1 by convention) and each
// view's own C^(i), on at most `cap` rows.
std::vector<double> consensus_mse(const CumiModel& m,
                                  std::span<const DenseMatrix> views, std::size_t cap);

struct Independence {
    double tc = 0.0;
    std::vector<double> hsic;
};

// TC(A_c, A_u1, …) and HSIC(C, U^(i)) with C from view 1, on at most `cap`
// rows of the given views.
Independence independence_curves(const CumiModel& m, std::span<const DenseMatrix> views,
                                 const TrainConfig& cfg, std::size_t cap);

// Fixed header: epoch,ce,mse_1..mse_v,h_c,tc,hsic_1..hsic_v,cmse_1..cmse_v,
// acc,prec,rec,f1
void write_metrics_csv(const std::string& path, std::span<const EpochMetrics> rows,
                       std::size_t view_count);

}  // namespace cumi::train
