#include "cumi/data_io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "cumi/rng.hpp"

namespace cumi::io {

namespace {

using nlohmann::json;

std::string locate(const std::string& file, std::size_t row, std::size_t col) {
    return file + ":row " + std::to_string(row + 1) + ":col " + std::to_string(col + 1);
}

double parse_cell(const std::string& cell, const std::string& file, std::size_t row,
                  std::size_t col) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError("non-numeric cell '" + cell + "' at " + locate(file, row, col));
    return value;
}

void format_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("manifest: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("manifest " + path + ": " + e.what());
    }

    DatasetManifest m;
    try {
        m.name = j.value("name", "dataset");
        for (const json& vj : j.at("views")) {
            ViewFile v;
            v.name = vj.value("name", "view" + std::to_string(m.views.size() + 1));
            v.csv_path = vj.at("csv_path").get<std::string>();
            v.dim = vj.at("dim").get<std::size_t>();
            m.views.push_back(std::move(v));
        }
        m.labels_path = j.value("labels_path", std::string{});
        m.n_classes = j.value("n_classes", 0);
        const std::string delim = j.value("delimiter", ",");
        m.delimiter = delim.empty() ? ',' : delim[0];
        m.has_header = j.value("has_header", false);
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path + ": " + e.what());
    }

    if (m.views.empty()) throw ParseError("manifest " + path + ": no views declared");
    for (const ViewFile& v : m.views)
        if (v.dim == 0)
            throw ParseError("manifest " + path + ": view '" + v.name +
                             "' has dim 0");
    if (!m.labels_path.empty() && m.n_classes < 2)
        throw ParseError("manifest " + path + ": labeled dataset needs n_classes >= 2");

    // Paths are relative to the manifest location.
    const auto base = std::filesystem::path(path).parent_path();
    for (ViewFile& v : m.views) {
        std::filesystem::path p(v.csv_path);
        if (p.is_relative()) v.csv_path = (base / p).string();
    }
    if (!m.labels_path.empty()) {
        std::filesystem::path p(m.labels_path);
        if (p.is_relative()) m.labels_path = (base / p).string();
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["name"] = m.name;
    json views = json::array();
    for (const ViewFile& v : m.views)
        views.push_back({{"name", v.name},
                         {"csv_path", std::filesystem::path(v.csv_path).filename().string()},
                         {"dim", v.dim}});
    j["views"] = views;
    if (!m.labels_path.empty()) {
        j["labels_path"] = std::filesystem::path(m.labels_path).filename().string();
        j["n_classes"] = m.n_classes;
    }
    j["delimiter"] = std::string(1, m.delimiter);
    j["has_header"] = m.has_header;
    std::ofstream out(path);
    if (!out) throw ParseError("manifest: cannot write " + path);
    out << j.dump(1) << "\n";
}

DenseMatrix read_csv(const std::string& path, char delimiter, bool has_header,
                     std::size_t expected_cols) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool skipped_header = !has_header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            ++lineno;
            continue;
        }
        if (!skipped_header) {
            skipped_header = true;
            ++lineno;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, delimiter))
            row.push_back(parse_cell(cell, path, rows.size(), col++));
        if (row.empty())
            throw ParseError("empty data row at " + locate(path, rows.size(), 0));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("ragged row width at " + locate(path, rows.size(), 0));
        rows.push_back(std::move(row));
        ++lineno;
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    if (expected_cols != 0 && rows.front().size() != expected_cols)
        throw ParseError(path + ": has " + std::to_string(rows.front().size()) +
                         " columns but " + std::to_string(expected_cols) +
                         " were declared");
    DenseMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

void write_csv(const DenseMatrix& m, const std::string& path, char delimiter) {
    std::string out;
    out.reserve(m.size() * 12);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += delimiter;
            format_double(out, m(i, j));
        }
        out += '\n';
    }
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    f << out;
}

MultiViewDataset load(const DatasetManifest& m) {
    MultiViewDataset ds;
    ds.name = m.name;
    ds.n_classes = m.n_classes;
    for (const ViewFile& v : m.views) {
        DenseMatrix mat = read_csv(v.csv_path, m.delimiter, m.has_header, v.dim);
        if (mat.cols() != v.dim)
            throw ParseError("view '" + v.name + "' (" + v.csv_path + "): has " +
                             std::to_string(mat.cols()) + " columns but dim " +
                             std::to_string(v.dim) + " was declared");
        if (!ds.views.empty() && mat.rows() != ds.views.front().rows())
            throw ParseError("view '" + v.name + "' (" + v.csv_path + "): has " +
                             std::to_string(mat.rows()) + " rows, expected " +
                             std::to_string(ds.views.front().rows()));
        ds.view_names.push_back(v.name);
        ds.views.push_back(std::move(mat));
    }
    if (!m.labels_path.empty()) {
        const DenseMatrix lab = read_csv(m.labels_path, m.delimiter, m.has_header, 1);
        if (lab.rows() != ds.sample_count())
            throw ParseError("labels (" + m.labels_path + "): have " +
                             std::to_string(lab.rows()) + " rows, expected " +
                             std::to_string(ds.sample_count()));
        for (std::size_t i = 0; i < lab.rows(); ++i) {
            const double v = lab(i, 0);
            const int y = static_cast<int>(v);
            if (v != static_cast<double>(y) || y < 0 || y >= m.n_classes)
                throw ParseError("label out of range [0," +
                                 std::to_string(m.n_classes) + ") at " +
                                 locate(m.labels_path, i, 0));
            ds.labels.push_back(y);
        }
    }
    return ds;
}

std::size_t MultiViewDataset::count_in_split(bool test) const {
    if (!has_split()) return test ? 0 : sample_count();
    std::size_t c = 0;
    for (std::uint8_t m : test_mask) c += (m != 0) == test;
    return c;
}

std::vector<std::size_t> split_indices(const MultiViewDataset& ds, bool test) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        const bool in_test = ds.has_split() && ds.test_mask[i] != 0;
        if (in_test == test) out.push_back(i);
    }
    return out;
}

std::vector<FeatureStats> compute_stats(const MultiViewDataset& ds, bool train_only) {
    std::vector<std::size_t> rows;
    if (train_only && ds.has_split()) {
        rows = split_indices(ds, false);
    } else {
        rows.resize(ds.sample_count());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    if (rows.empty()) throw ContractError("compute_stats: stats split is empty");
    std::vector<FeatureStats> stats;
    for (const DenseMatrix& view : ds.views) {
        FeatureStats s;
        s.mean.assign(view.cols(), 0.0);
        s.stddev.assign(view.cols(), 0.0);
        for (std::size_t r : rows)
            for (std::size_t j = 0; j < view.cols(); ++j) s.mean[j] += view(r, j);
        for (double& v : s.mean) v /= static_cast<double>(rows.size());
        for (std::size_t r : rows)
            for (std::size_t j = 0; j < view.cols(); ++j) {
                const double d = view(r, j) - s.mean[j];
                s.stddev[j] += d * d;
            }
        for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(rows.size()));
        stats.push_back(std::move(s));
    }
    return stats;
}

void apply_standardization(MultiViewDataset& ds, const std::vector<FeatureStats>& stats) {
    if (stats.size() != ds.views.size())
        throw ContractError("apply_standardization: stats/view count mismatch");
    for (std::size_t v = 0; v < ds.views.size(); ++v) {
        DenseMatrix& view = ds.views[v];
        const FeatureStats& s = stats[v];
        if (s.mean.size() != view.cols())
            throw ContractError("apply_standardization: stats width mismatch");
        for (std::size_t i = 0; i < view.rows(); ++i)
            for (std::size_t j = 0; j < view.cols(); ++j) {
                view(i, j) -= s.mean[j];
                if (s.stddev[j] >= 1e-12) view(i, j) /= s.stddev[j];
            }
    }
}

std::vector<FeatureStats> standardize(MultiViewDataset& ds) {
    std::vector<FeatureStats> stats = compute_stats(ds, true);
    apply_standardization(ds, stats);
    return stats;
}

void split(MultiViewDataset& ds, double test_fraction, std::uint64_t seed) {
    if (ds.labels.empty())
        throw ContractError("split: stratified split requires labels");
    if (!(test_fraction >= 0.0) || !(test_fraction < 1.0))
        throw ContractError("split: test_fraction must lie in [0,1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        by_class[ds.labels[i]].push_back(i);
    for (const auto& [cls, members] : by_class)
        if (members.size() < 2)
            throw ContractError("split: class " + std::to_string(cls) +
                                " has fewer than 2 samples");

    ds.test_mask.assign(ds.sample_count(), 0);
    Rng rng(seed);
    for (auto& [cls, members] : by_class) {
        rng.shuffle(members);
        auto want = static_cast<std::size_t>(std::floor(
            static_cast<double>(members.size()) * test_fraction + 0.5));
        want = std::min(want, members.size() - 1);  // never empty the train side
        for (std::size_t k = 0; k < want; ++k) ds.test_mask[members[k]] = 1;
    }
}

MultiViewDataset make_mini_dataset(std::uint64_t seed) {
    // 3 classes × 20 samples; view 1 has 6 features, view 2 has 4. Class
    // centers are far apart relative to the within-class noise.
    constexpr std::size_t kPerClass = 20;
    constexpr int kClasses = 3;
    constexpr std::size_t kD1 = 6;
    constexpr std::size_t kD2 = 4;
    const std::size_t n = kPerClass * kClasses;

    Rng rng(seed);
    DenseMatrix centers1(kClasses, kD1), centers2(kClasses, kD2);
    for (std::size_t i = 0; i < centers1.size(); ++i)
        centers1.data()[i] = 4.0 * rng.normal();
    for (std::size_t i = 0; i < centers2.size(); ++i)
        centers2.data()[i] = 4.0 * rng.normal();

    MultiViewDataset ds;
    ds.name = "mini";
    ds.view_names = {"view1", "view2"};
    ds.n_classes = kClasses;
    DenseMatrix x1(n, kD1), x2(n, kD2);
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i / kPerClass);
        ds.labels.push_back(cls);
        for (std::size_t j = 0; j < kD1; ++j)
            x1(i, j) = centers1(static_cast<std::size_t>(cls), j) + rng.normal();
        for (std::size_t j = 0; j < kD2; ++j)
            x2(i, j) = centers2(static_cast<std::size_t>(cls), j) + rng.normal();
    }
    ds.views = {std::move(x1), std::move(x2)};
    return ds;
}

std::string save_dataset_csv(const MultiViewDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    DatasetManifest m;
    m.name = ds.name;
    m.n_classes = ds.n_classes;
    for (std::size_t v = 0; v < ds.views.size(); ++v) {
        const std::string fname = ds.view_names[v] + ".csv";
        write_csv(ds.views[v], (fs::path(dir) / fname).string());
        m.views.push_back(ViewFile{ds.view_names[v], fname, ds.views[v].cols()});
    }
    if (!ds.labels.empty()) {
        DenseMatrix lab(ds.labels.size(), 1);
        for (std::size_t i = 0; i < ds.labels.size(); ++i)
            lab(i, 0) = static_cast<double>(ds.labels[i]);
        write_csv(lab, (fs::path(dir) / "labels.csv").string());
        m.labels_path = "labels.csv";
    }
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    save_manifest(m, manifest_path);
    return manifest_path;
}

}  // namespace cumi::io
