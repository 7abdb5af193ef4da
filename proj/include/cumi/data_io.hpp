#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cumi/matrix.hpp"

namespace cumi::io {

struct ViewFile {
    std::string name;
    std::string csv_path;
    std::size_t dim = 0;
};

struct DatasetManifest {
    std::string name;
    std::vector<ViewFile> views;
    std::string labels_path;
    int n_classes = 0;
    char delimiter = ',';
    bool has_header = false;
};

// Parses and validates the manifest JSON; errors name the offending field.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

struct MultiViewDataset {
    std::string name;
    std::vector<std::string> view_names;
    std::vector<DenseMatrix> views;      // each N×d_i
    std::vector<int> labels;             // empty = unlabeled
    int n_classes = 0;
    std::vector<std::uint8_t> test_mask; // empty = no split

    std::size_t sample_count() const { return views.empty() ? 0 : views[0].rows(); }
    bool has_split() const { return !test_mask.empty(); }
    std::size_t count_in_split(bool test) const;
};

// Reads all view CSVs and the labels CSV, validating row counts, declared
// dims, numeric cells and label ranges. Error messages name the file, row
// and column.
MultiViewDataset load(const DatasetManifest& m);

// Plain numeric CSV (no manifest). expected_cols = 0 accepts any width.
DenseMatrix read_csv(const std::string& path, char delimiter, bool has_header,
                     std::size_t expected_cols = 0);
void write_csv(const DenseMatrix& m, const std::string& path, char delimiter = ',');

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // entries < 1e-12 mark pass-through features
};

// Per-feature z-score. Stats come from the training rows when a split
// exists, otherwise from all rows. Features with stddev < 1e-12 are
// mean-centered only. Returns the stats per view.
std::vector<FeatureStats> standardize(MultiViewDataset& ds);
std::vector<FeatureStats> compute_stats(const MultiViewDataset& ds, bool train_only);
void apply_standardization(MultiViewDataset& ds, const std::vector<FeatureStats>& stats);

// Stratified train/test split; deterministic per seed. Every class needs at
// least 2 samples (ContractError otherwise).
void split(MultiViewDataset& ds, double test_fraction, std::uint64_t seed);

// Row subset helper (mask semantics: keep rows where mask handling matches
// `test` flag; no split = everything is training data).
std::vector<std::size_t> split_indices(const MultiViewDataset& ds, bool test);

// The bundled miniature dataset: 2 views, 60 samples, 3 well-separated
// classes, deterministic per seed.
MultiViewDataset make_mini_dataset(std::uint64_t seed);

// Materializes a dataset as CSV files + manifest.json under dir; returns the
// manifest path. Values round-trip bit-exactly through load().
std::string save_dataset_csv(const MultiViewDataset& ds, const std::string& dir);

}  // namespace cumi::io
