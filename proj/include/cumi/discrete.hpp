#pragma once

#include <span>
#include <vector>

#include "cumi/common.hpp"

namespace cumi::info {

// Exact Shannon quantities on small finite joint distributions, computed by
// exhaustive summation. Serves as the independent oracle for the discrete
// information-decomposition checks.
class DiscretePmf {
public:
    // shape[k] = number of outcomes along axis k; probs in row-major order
    // over the outcome grid. Entries must be >= 0 and sum to 1 within 1e-12.
    DiscretePmf(std::vector<std::size_t> shape, std::vector<double> probs);

    std::size_t axis_count() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }

    // Marginal (or joint) Shannon entropy over the given axes, in bits.
    double entropy(std::span<const std::size_t> axes) const;

    // I(A;B) = H(A) + H(B) − H(A ∪ B); the axis sets must be disjoint.
    double mutual_information(std::span<const std::size_t> axes_a,
                              std::span<const std::size_t> axes_b) const;

private:
    std::vector<double> marginal(std::span<const std::size_t> axes) const;

    std::vector<std::size_t> shape_;
    std::vector<double> probs_;
};

}  // namespace cumi::info
