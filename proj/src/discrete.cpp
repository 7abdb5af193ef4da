#include "cumi/discrete.hpp"

#include <algorithm>
#include <cmath>

namespace cumi::info {

DiscretePmf::DiscretePmf(std::vector<std::size_t> shape, std::vector<double> probs)
    : shape_(std::move(shape)), probs_(std::move(probs)) {
    if (shape_.empty()) throw ContractError("discrete_pmf: no axes");
    std::size_t cells = 1;
    for (std::size_t s : shape_) {
        if (s == 0) throw ContractError("discrete_pmf: empty axis");
        cells *= s;
    }
    if (probs_.size() != cells)
        throw ContractError("discrete_pmf: probability count does not match grid");
    double total = 0.0;
    for (double p : probs_) {
        if (p < 0.0) throw ContractError("discrete_pmf: negative probability");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw ContractError("discrete_pmf: probabilities must sum to 1");
}

std::vector<double> DiscretePmf::marginal(std::span<const std::size_t> axes) const {
    for (std::size_t a : axes)
        if (a >= shape_.size()) throw ContractError("discrete_pmf: axis out of range");
    std::size_t cells = 1;
    for (std::size_t a : axes) cells *= shape_[a];
    std::vector<double> out(cells, 0.0);

    const std::size_t n_axes = shape_.size();
    std::vector<std::size_t> idx(n_axes, 0);
    for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
        std::size_t key = 0;
        for (std::size_t a : axes) key = key * shape_[a] + idx[a];
        out[key] += probs_[flat];
        for (std::size_t a = n_axes; a-- > 0;) {
            if (++idx[a] < shape_[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

double DiscretePmf::entropy(std::span<const std::size_t> axes) const {
    if (axes.empty()) throw ContractError("discrete_pmf: entropy over no axes");
    double h = 0.0;
    for (double p : marginal(axes))
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

double DiscretePmf::mutual_information(std::span<const std::size_t> axes_a,
                                       std::span<const std::size_t> axes_b) const {
    // The variable pairs may share axes (e.g. Z1=(C,U1) and Z2=(C,U2) share
    // C); the joint is the deduplicated union.
    std::vector<std::size_t> joint(axes_a.begin(), axes_a.end());
    for (std::size_t b : axes_b)
        if (std::find(joint.begin(), joint.end(), b) == joint.end())
            joint.push_back(b);
    return entropy(axes_a) + entropy(axes_b) - entropy(joint);
}

}  // namespace cumi::info
