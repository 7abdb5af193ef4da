// cumi: common/unique multi-view information toolkit.
//
// Subcommands: synth (synthetic separation experiment), train (supervised
// run on a manifest dataset), entropy (matrix-based entropy of a CSV),
// sweep (beta/gamma grid), mkdata (materialize the bundled mini dataset).
//
// stdout carries one JSON document per successful run; prose goes to stderr.
// Exit codes: 0 ok, 2 input/contract error, 3 numeric error.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cumi/common.hpp"
#include "cumi/data_io.hpp"
#include "cumi/estimators.hpp"
#include "cumi/synthetic.hpp"
#include "cumi/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cumi;

namespace {

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

int thread_cap() {
    const char* env = std::getenv("CUMI_THREADS");
    if (!env) return 1;
    const int v = std::atoi(env);
    return v > 0 ? v : 1;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << j.dump(1) << "\n";
}

void write_run_record(const std::string& dir, const std::string& command,
                      const json& config, std::vector<std::string> outputs,
                      const std::string& started, const std::string& finished) {
    outputs.push_back("run_record.json");
    json j;
    j["artifact_version"] = kArtifactVersion;
    j["command"] = command;
    j["config"] = config;
    j["outputs"] = outputs;
    j["started_at"] = started;
    j["finished_at"] = finished;
    write_json_file(j, (fs::path(dir) / "run_record.json").string());
}

json metrics_to_json(const train::Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1}};
}

// ---- synth ----

struct SynthArgs {
    std::uint64_t seed = synth::SyntheticConfig{}.seed;
    int epochs = synth::SyntheticConfig{}.epochs;
    double beta = synth::SyntheticConfig{}.beta;
    double gamma = synth::SyntheticConfig{}.gamma;
    std::string out_dir = "cumi-synth-out";
};

json synth_config_json(const synth::SyntheticConfig& cfg) {
    return {{"seed", cfg.seed},
            {"n", cfg.n},
            {"epochs", cfg.epochs},
            {"alpha", cfg.alpha},
            {"beta", cfg.beta},
            {"gamma", cfg.gamma},
            {"lr", cfg.lr},
            {"batch_size", cfg.batch_size},
            {"loss_bandwidth",
             cfg.bandwidth_mode == info::BandwidthMode::kFixed
                 ? json{{"mode", "fixed"}, {"sigma", cfg.fixed_sigma}}
                 : json{{"mode", "median"}}},
            {"curve_bandwidth", "median"},
            {"eval_donor_view", 1},
            {"latent_dims", {{"d_c", 1}, {"d_u", 1}}}};
}

int run_synth_cmd(const SynthArgs& a) {
    const std::string started = iso8601_now();
    synth::SyntheticConfig cfg;
    cfg.seed = a.seed;
    cfg.epochs = a.epochs;
    cfg.beta = a.beta;
    cfg.gamma = a.gamma;

    fs::create_directories(a.out_dir);
    std::cerr << "running synthetic experiment (seed " << cfg.seed << ", "
              << cfg.epochs << " epochs)\n";
    const synth::SyntheticOutputs out = synth::run_synthetic(cfg);

    const std::string signals = (fs::path(a.out_dir) / "synthetic_signals.csv").string();
    const std::string report = (fs::path(a.out_dir) / "synthetic_report.json").string();
    const std::string metrics = (fs::path(a.out_dir) / "metrics.csv").string();
    synth::write_signals_csv(out, signals);
    synth::write_report_json(out, cfg, report);
    train::write_metrics_csv(metrics, out.training.epochs, 2);
    write_run_record(a.out_dir, "synth", synth_config_json(cfg),
                     {"synthetic_signals.csv", "synthetic_report.json", "metrics.csv"},
                     started, iso8601_now());

    json result;
    result["out_dir"] = a.out_dir;
    result["alignment"] = {
        {"c", {out.c_alignment[0], out.c_alignment[1]}},
        {"u", {out.u_alignment[0], out.u_alignment[1]}},
        {"u_vs_c", {out.u_cross_alignment[0], out.u_cross_alignment[1]}},
        {"cca_c", {out.cca_alignment[0], out.cca_alignment[1]}}};
    result["files"] = {"synthetic_signals.csv", "synthetic_report.json", "metrics.csv",
                       "run_record.json"};
    std::cout << result.dump() << "\n";
    return 0;
}

// ---- train ----

struct TrainArgs {
    std::string manifest;
    double alpha = train::TrainConfig{}.alpha;
    double beta = train::TrainConfig{}.beta;
    double gamma = train::TrainConfig{}.gamma;
    double lr = train::TrainConfig{}.lr;
    int batch = train::TrainConfig{}.batch_size;
    int epochs = train::TrainConfig{}.epochs;
    std::uint64_t seed = 1;
    double test_fraction = 0.2;
    std::string out_dir = "cumi-train-out";
};

json train_config_json(const TrainArgs& a, const train::TrainConfig& cfg) {
    return {{"manifest", a.manifest},
            {"alpha", cfg.alpha},
            {"beta", cfg.beta},
            {"gamma", cfg.gamma},
            {"lr", cfg.lr},
            {"batch_size", cfg.batch_size},
            {"epochs", cfg.epochs},
            {"seed", cfg.seed},
            {"test_fraction", a.test_fraction},
            {"bandwidth", "median"},
            {"donor_policy", "uniform_per_batch"},
            {"standardize", "train_split_stats"},
            {"diagnostics_cap", cfg.diagnostics_cap}};
}

int run_train_cmd(const TrainArgs& a) {
    const std::string started = iso8601_now();
    const io::DatasetManifest manifest = io::load_manifest(a.manifest);
    io::MultiViewDataset ds = io::load(manifest);
    if (ds.labels.empty())
        throw ContractError("train requires a labeled dataset (labels_path missing in " +
                            a.manifest + ")");
    io::split(ds, a.test_fraction, a.seed);
    io::standardize(ds);

    std::vector<ViewSpec> specs;
    for (std::size_t v = 0; v < ds.views.size(); ++v)
        specs.push_back({ds.views[v].cols(), static_cast<int>(v)});
    CumiModel model = init_model(specs, ds.n_classes, a.seed);

    train::TrainConfig cfg;
    cfg.alpha = a.alpha;
    cfg.beta = a.beta;
    cfg.gamma = a.gamma;
    cfg.lr = a.lr;
    cfg.batch_size = a.batch;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;

    std::cerr << "training on '" << ds.name << "' (" << ds.sample_count()
              << " samples, " << ds.views.size() << " views)\n";
    const train::TrainResult result = train::train(model, ds, cfg);

    fs::create_directories(a.out_dir);
    const std::string ckpt = (fs::path(a.out_dir) / "checkpoint.json").string();
    const std::string metrics = (fs::path(a.out_dir) / "metrics.csv").string();
    save_model(model, ckpt);
    train::write_metrics_csv(metrics, result.epochs, ds.views.size());
    write_run_record(a.out_dir, "train", train_config_json(a, cfg),
                     {"checkpoint.json", "metrics.csv"}, started, iso8601_now());

    json out;
    out["out_dir"] = a.out_dir;
    out["epochs"] = result.epochs.size();
    out["final_train"] = metrics_to_json(result.epochs.back().train);
    if (result.epochs.back().heldout)
        out["final_test"] = metrics_to_json(*result.epochs.back().heldout);
    out["files"] = {"checkpoint.json", "metrics.csv", "run_record.json"};
    std::cout << out.dump() << "\n";
    return 0;
}

// ---- entropy ----

struct EntropyArgs {
    std::string csv;
    double alpha = 1.01;
    double sigma = 0.0;  // 0 = median heuristic
    bool median = false;
};

int run_entropy_cmd(const EntropyArgs& a) {
    const DenseMatrix x = io::read_csv(a.csv, ',', false);
    const double sigma = a.sigma > 0.0 ? a.sigma : info::median_bandwidth(x);
    const double h = info::renyi_entropy(info::gaussian_gram(x, sigma), a.alpha);
    json out;
    out["h_alpha_bits"] = h;
    out["alpha"] = a.alpha;
    out["sigma_used"] = sigma;
    out["bandwidth_mode"] = a.sigma > 0.0 ? "fixed" : "median";
    out["rows"] = x.rows();
    out["cols"] = x.cols();
    std::cout << out.dump() << "\n";
    return 0;
}

// ---- sweep ----

struct SweepArgs {
    std::string manifest;
    std::vector<double> beta_grid;
    std::vector<double> gamma_grid;
    std::vector<std::uint64_t> seeds{1};
    std::string out_dir = "cumi-sweep-out";
};

struct CellResult {
    double beta = 0.0, gamma = 0.0;
    std::vector<double> accuracies;
    std::vector<std::string> errors;
};

int run_sweep_cmd(const SweepArgs& a) {
    const std::string started = iso8601_now();
    if (a.beta_grid.empty() || a.gamma_grid.empty())
        throw ContractError("sweep: beta and gamma grids must be nonempty");

    const io::DatasetManifest manifest = io::load_manifest(a.manifest);
    const io::MultiViewDataset base = io::load(manifest);
    if (base.labels.empty())
        throw ContractError("sweep requires a labeled dataset");

    std::vector<double> betas = a.beta_grid;
    std::vector<double> gammas = a.gamma_grid;
    std::sort(betas.begin(), betas.end());
    std::sort(gammas.begin(), gammas.end());

    std::vector<CellResult> cells;
    for (double b : betas)
        for (double g : gammas) cells.push_back({b, g, {}, {}});

    // Cells run independently; CUMI_THREADS caps the worker count. Every
    // cell is internally serial and seed-isolated, so the results do not
    // depend on the thread count.
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= cells.size()) return;
            CellResult& cell = cells[k];
            for (std::uint64_t seed : a.seeds) {
                try {
                    io::MultiViewDataset ds = base;
                    io::split(ds, 0.2, seed);
                    io::standardize(ds);
                    std::vector<ViewSpec> specs;
                    for (std::size_t v = 0; v < ds.views.size(); ++v)
                        specs.push_back({ds.views[v].cols(), static_cast<int>(v)});
                    CumiModel model = init_model(specs, ds.n_classes, seed);
                    train::TrainConfig cfg;
                    cfg.beta = cell.beta;
                    cfg.gamma = cell.gamma;
                    cfg.seed = seed;
                    train::train(model, ds, cfg);
                    cell.accuracies.push_back(
                        train::evaluate(model, ds, true).accuracy);
                } catch (const std::exception& e) {
                    cell.errors.push_back("seed " + std::to_string(seed) + ": " +
                                          e.what());
                }
            }
        }
    };
    const int workers = std::min<int>(thread_cap(), static_cast<int>(cells.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    fs::create_directories(a.out_dir);
    std::string csv = "beta,gamma,seeds,ok,acc_mean,acc_std\n";
    char buf[64];
    std::size_t total_ok = 0;
    for (const CellResult& cell : cells) {
        double mean = 0.0, stddev = 0.0;
        for (double acc : cell.accuracies) mean += acc;
        if (!cell.accuracies.empty()) mean /= static_cast<double>(cell.accuracies.size());
        for (double acc : cell.accuracies) stddev += (acc - mean) * (acc - mean);
        if (!cell.accuracies.empty())
            stddev = std::sqrt(stddev / static_cast<double>(cell.accuracies.size()));
        total_ok += cell.accuracies.size();
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", cell.beta, cell.gamma);
        csv += buf;
        csv += std::to_string(a.seeds.size()) + "," +
               std::to_string(cell.accuracies.size()) + ",";
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", mean, stddev);
        csv += buf;
        for (const std::string& err : cell.errors)
            std::cerr << "cell (beta=" << cell.beta << ", gamma=" << cell.gamma
                      << ") failed: " << err << "\n";
    }
    const std::string sweep_csv = (fs::path(a.out_dir) / "sweep.csv").string();
    std::ofstream f(sweep_csv);
    if (!f) throw ParseError("cannot write " + sweep_csv);
    f << csv;
    f.close();

    json config{{"manifest", a.manifest},
                {"beta_grid", betas},
                {"gamma_grid", gammas},
                {"seeds", a.seeds}};
    write_run_record(a.out_dir, "sweep", config, {"sweep.csv"}, started, iso8601_now());

    json out;
    out["out_dir"] = a.out_dir;
    out["cells"] = cells.size();
    out["runs_ok"] = total_ok;
    out["runs_failed"] = cells.size() * a.seeds.size() - total_ok;
    out["files"] = {"sweep.csv", "run_record.json"};
    std::cout << out.dump() << "\n";
    if (total_ok == 0) throw NumericError("sweep: every cell failed");
    return 0;
}

// ---- mkdata ----

int run_mkdata_cmd(std::uint64_t seed, const std::string& out_dir) {
    const io::MultiViewDataset ds = io::make_mini_dataset(seed);
    const std::string manifest = io::save_dataset_csv(ds, out_dir);
    json out;
    out["manifest"] = manifest;
    out["samples"] = ds.sample_count();
    out["views"] = ds.views.size();
    out["n_classes"] = ds.n_classes;
    out["seed"] = seed;
    std::cout << out.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"common/unique multi-view information toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "run the two-view synthetic separation experiment");
    synth_cmd->add_option("--seed", synth_args.seed, "rng seed");
    synth_cmd->add_option("--epochs", synth_args.epochs, "training epochs");
    synth_cmd->add_option("--beta", synth_args.beta, "weight on H(C)");
    synth_cmd->add_option("--gamma", synth_args.gamma, "weight on total correlation");
    synth_cmd->add_option("--out-dir", synth_args.out_dir, "output directory");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train on a manifest dataset");
    train_cmd->add_option("--manifest", train_args.manifest, "dataset manifest JSON")
        ->required();
    train_cmd->add_option("--alpha", train_args.alpha, "entropy order");
    train_cmd->add_option("--beta", train_args.beta, "weight on H(C)");
    train_cmd->add_option("--gamma", train_args.gamma, "weight on total correlation");
    train_cmd->add_option("--lr", train_args.lr, "learning rate");
    train_cmd->add_option("--batch", train_args.batch, "minibatch size");
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--seed", train_args.seed, "rng seed");
    train_cmd->add_option("--out-dir", train_args.out_dir, "output directory");

    EntropyArgs entropy_args;
    CLI::App* entropy_cmd =
        app.add_subcommand("entropy", "matrix-based entropy of a numeric CSV");
    entropy_cmd->add_option("--csv", entropy_args.csv, "numeric CSV path")->required();
    entropy_cmd->add_option("--alpha", entropy_args.alpha, "entropy order");
    CLI::Option* sigma_opt =
        entropy_cmd->add_option("--sigma", entropy_args.sigma, "fixed kernel bandwidth");
    entropy_cmd->add_flag("--median", entropy_args.median, "median-distance bandwidth")
        ->excludes(sigma_opt);

    SweepArgs sweep_args;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "beta/gamma grid sweep");
    sweep_cmd->add_option("--manifest", sweep_args.manifest, "dataset manifest JSON")
        ->required();
    sweep_cmd->add_option("--beta-grid", sweep_args.beta_grid, "beta values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--gamma-grid", sweep_args.gamma_grid, "gamma values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--seeds", sweep_args.seeds, "seeds per cell")->delimiter(',');
    sweep_cmd->add_option("--out-dir", sweep_args.out_dir, "output directory");

    std::uint64_t mkdata_seed = 4;
    std::string mkdata_dir = "cumi-mini-data";
    CLI::App* mkdata_cmd =
        app.add_subcommand("mkdata", "materialize the bundled miniature dataset");
    mkdata_cmd->add_option("--seed", mkdata_seed, "generator seed");
    mkdata_cmd->add_option("--out-dir", mkdata_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth_cmd->parsed()) return run_synth_cmd(synth_args);
        if (train_cmd->parsed()) return run_train_cmd(train_args);
        if (entropy_cmd->parsed()) return run_entropy_cmd(entropy_args);
        if (sweep_cmd->parsed()) return run_sweep_cmd(sweep_args);
        if (mkdata_cmd->parsed()) return run_mkdata_cmd(mkdata_seed, mkdata_dir);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
