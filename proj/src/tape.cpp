#include "cumi/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "cumi/kernels.hpp"

namespace cumi {

namespace {

constexpr double kLn2 = 0.69314718055994530941723212145818;

bool is_scalar(const DenseMatrix& m) { return m.rows() == 1 && m.cols() == 1; }

std::size_t ix(NodeId id) { return static_cast<std::size_t>(id); }

}  // namespace

NodeId Tape::push(DenseMatrix value, OpKind op, std::vector<NodeId> parents,
                  BackwardFn backward) {
    Node n;
    n.grad = DenseMatrix(value.rows(), value.cols());
    n.value = std::move(value);
    n.op = op;
    n.parents = std::move(parents);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::at(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw ContractError("tape: invalid node id");
    return nodes_[static_cast<std::size_t>(id)];
}

Tape::Node& Tape::at(NodeId id) {
    return const_cast<Node&>(static_cast<const Tape*>(this)->at(id));
}

const DenseMatrix& Tape::value(NodeId id) const { return at(id).value; }
const DenseMatrix& Tape::grad(NodeId id) const { return at(id).grad; }
OpKind Tape::op(NodeId id) const { return at(id).op; }

NodeId Tape::leaf(DenseMatrix value) {
    return push(std::move(value), OpKind::kLeaf, {}, nullptr);
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    if (value(a).cols() != value(b).rows())
        throw DimensionError("matmul: inner dimensions differ");
    NodeId self = push(cumi::matmul(value(a), value(b)), OpKind::kMatmul, {a, b}, nullptr);
    at(self).backward = [self, a, b](Tape& t, std::vector<DenseMatrix>& adj) {
        const DenseMatrix& g = adj[ix(self)];
        adj[ix(a)].add_in_place(matmul_nt(g, t.value(b)));
        adj[ix(b)].add_in_place(matmul_tn(t.value(a), g));
    };
    return self;
}

NodeId Tape::add(NodeId a, NodeId b) {
    require_same_shape(value(a), value(b), "add");
    NodeId self = push(cumi::add(value(a), value(b)), OpKind::kAdd, {a, b}, nullptr);
    at(self).backward = [self, a, b](Tape&, std::vector<DenseMatrix>& adj) {
        adj[ix(a)].add_in_place(adj[ix(self)]);
        adj[ix(b)].add_in_place(adj[ix(self)]);
    };
    return self;
}

NodeId Tape::sub(NodeId a, NodeId b) {
    require_same_shape(value(a), value(b), "sub");
    NodeId self = push(cumi::sub(value(a), value(b)), OpKind::kSub, {a, b}, nullptr);
    at(self).backward = [self, a, b](Tape&, std::vector<DenseMatrix>& adj) {
        adj[ix(a)].add_in_place(adj[ix(self)]);
        adj[ix(b)].axpy_in_place(-1.0, adj[ix(self)]);
    };
    return self;
}

NodeId Tape::hadamard(NodeId a, NodeId b) {
    require_same_shape(value(a), value(b), "hadamard");
    NodeId self =
        push(cumi::hadamard(value(a), value(b)), OpKind::kHadamard, {a, b}, nullptr);
    at(self).backward = [self, a, b](Tape& t, std::vector<DenseMatrix>& adj) {
        const DenseMatrix& g = adj[ix(self)];
        adj[ix(a)].add_in_place(cumi::hadamard(g, t.value(b)));
        adj[ix(b)].add_in_place(cumi::hadamard(g, t.value(a)));
    };
    return self;
}

NodeId Tape::relu(NodeId a) {
    const DenseMatrix& av = value(a);
    DenseMatrix out(av.rows(), av.cols());
    kern::relu(av.data(), out.data(), out.size());
    NodeId self = push(std::move(out), OpKind::kRelu, {a}, nullptr);
    at(self).backward = [self, a](Tape& t, std::vector<DenseMatrix>& adj) {
        const DenseMatrix& g = adj[ix(self)];
        const DenseMatrix& x = t.value(a);
        DenseMatrix masked(g.rows(), g.cols());
        kern::relu_mask(x.data(), g.data(), masked.data(), masked.size());
        adj[ix(a)].add_in_place(masked);
    };
    return self;
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId bias) {
    const DenseMatrix& xv = value(x);
    const DenseMatrix& wv = value(w);
    const DenseMatrix& bv = value(bias);
    if (xv.cols() != wv.rows()) throw DimensionError("affine: x·w inner dimensions differ");
    if (bv.rows() != 1 || bv.cols() != wv.cols())
        throw DimensionError("affine: bias must be 1x" + std::to_string(wv.cols()));
    DenseMatrix out = cumi::matmul(xv, wv);
    for (std::size_t i = 0; i < out.rows(); ++i)
        kern::add(out.row(i), bv.data(), out.row(i), out.cols());
    NodeId self = push(std::move(out), OpKind::kAffine, {x, w, bias}, nullptr);
    at(self).backward = [self, x, w, bias](Tape& t, std::vector<DenseMatrix>& adj) {
        const DenseMatrix& g = adj[ix(self)];
        adj[ix(x)].add_in_place(matmul_nt(g, t.value(w)));
        adj[ix(w)].add_in_place(matmul_tn(t.value(x), g));
        DenseMatrix& gb = adj[ix(bias)];
        for (std::size_t i = 0; i < g.rows(); ++i)
            kern::add(gb.data(), g.row(i), gb.data(), g.cols());
    };
    return self;
}

NodeId Tape::concat_cols(std::span<const NodeId> parts) {
    if (parts.empty()) throw ContractError("concat_cols: empty part list");
    const std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    for (NodeId p : parts) {
        if (value(p).rows() != rows)
            throw DimensionError("concat_cols: row counts differ");
        cols += value(p).cols();
    }
    DenseMatrix out(rows, cols);
    std::vector<std::size_t> offsets;
    offsets.reserve(parts.size());
    std::size_t off = 0;
    for (NodeId p : parts) {
        const DenseMatrix& pv = value(p);
        offsets.push_back(off);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
        off += pv.cols();
    }
    std::vector<NodeId> parents(parts.begin(), parts.end());
    NodeId self = push(std::move(out), OpKind::kConcatCols, parents, nullptr);
    at(self).backward = [self, parents, offsets](Tape& t,
                                                 std::vector<DenseMatrix>& adj) {
        const DenseMatrix& g = adj[ix(self)];
        for (std::size_t k = 0; k < parents.size(); ++k) {
            DenseMatrix& gp = adj[ix(parents[k])];
            const std::size_t off2 = offsets[k];
            const std::size_t w = t.value(parents[k]).cols();
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, off2 + j);
        }
    };
    return self;
}

NodeId Tape::sum(NodeId a) {
    DenseMatrix out(1, 1);
    out(0, 0) = value(a).sum();
    NodeId self = push(std::move(out), OpKind::kSum, {a}, nullptr);
    at(self).backward = [self, a](Tape&, std::vector<DenseMatrix>& adj) {
        const double g = adj[ix(self)](0, 0);
        DenseMatrix& ga = adj[ix(a)];
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
    };
    return self;
}

NodeId Tape::trace(NodeId a) {
    DenseMatrix out(1, 1);
    out(0, 0) = value(a).trace();
    NodeId self = push(std::move(out), OpKind::kTrace, {a}, nullptr);
    at(self).backward = [self, a](Tape&, std::vector<DenseMatrix>& adj) {
        const double g = adj[ix(self)](0, 0);
        DenseMatrix& ga = adj[ix(a)];
        for (std::size_t i = 0; i < ga.rows(); ++i) ga(i, i) += g;
    };
    return self;
}

NodeId Tape::scale(NodeId a, double c) {
    NodeId self = push(cumi::scale(value(a), c), OpKind::kScale, {a}, nullptr);
    at(self).backward = [self, a, c](Tape&, std::vector<DenseMatrix>& adj) {
        adj[ix(a)].axpy_in_place(c, adj[ix(self)]);
    };
    return self;
}

NodeId Tape::div_scalar(NodeId a, NodeId s) {
    if (!is_scalar(value(s))) throw ContractError("div_scalar: divisor must be 1x1");
    const double sv = value(s)(0, 0);
    if (sv == 0.0) throw NumericError("div_scalar: division by zero");
    NodeId self = push(cumi::scale(value(a), 1.0 / sv), OpKind::kDivScalar, {a, s}, nullptr);
    at(self).backward = [self, a, s, sv](Tape& t, std::vector<DenseMatrix>& adj) {
        const DenseMatrix& g = adj[ix(self)];
        adj[ix(a)].axpy_in_place(1.0 / sv, g);
        const double dotted = kern::dot(g.data(), t.value(a).data(), g.size());
        adj[ix(s)](0, 0) += -dotted / (sv * sv);
    };
    return self;
}

NodeId Tape::log2_scalar(NodeId s) {
    if (!is_scalar(value(s))) throw ContractError("log2_scalar: input must be 1x1");
    const double sv = value(s)(0, 0);
    if (!(sv > 0.0)) throw NumericError("log2_scalar: input must be positive");
    DenseMatrix out(1, 1);
    out(0, 0) = std::log2(sv);
    NodeId self = push(std::move(out), OpKind::kLog2Scalar, {s}, nullptr);
    at(self).backward = [self, s, sv](Tape&, std::vector<DenseMatrix>& adj) {
        adj[ix(s)](0, 0) += adj[ix(self)](0, 0) / (sv * kLn2);
    };
    return self;
}

NodeId Tape::mean_squared_error(NodeId a, NodeId b) {
    require_same_shape(value(a), value(b), "mean_squared_error");
    NodeId d = sub(a, b);
    NodeId sq = hadamard(d, d);
    NodeId total = sum(sq);
    return scale(total, 1.0 / static_cast<double>(value(a).size()));
}

NodeId Tape::gaussian_gram(NodeId x, double sigma) {
    if (!(sigma > 0.0)) throw ContractError("gaussian_gram: sigma must be positive");
    const DenseMatrix& xv = value(x);
    require_finite(xv, "gaussian_gram");
    const std::size_t n = xv.rows();
    if (n < 1) throw ContractError("gaussian_gram: empty input");
    const double inv = 1.0 / (2.0 * sigma * sigma);
    DenseMatrix a(n, n);
    for (std::size_t m = 0; m < n; ++m) {
        a(m, m) = 1.0 / static_cast<double>(n);
        for (std::size_t k = m + 1; k < n; ++k) {
            const double d2 = kern::sqdist(xv.row(m), xv.row(k), xv.cols());
            const double v = std::exp(-d2 * inv) / static_cast<double>(n);
            a(m, k) = v;
            a(k, m) = v;
        }
    }
    NodeId self = push(std::move(a), OpKind::kGaussianGram, {x}, nullptr);
    at(self).backward = [self, x, inv](Tape& t, std::vector<DenseMatrix>& adj) {
        // With A = K/N: dL/d(d²_mn) = G_mn ∘ A_mn · (-1/(2σ²)). Symmetrize,
        // then dL/dX = 2(diag(S·1) - S)·X.
        const DenseMatrix& g = adj[ix(self)];
        const DenseMatrix& av = t.value(self);
        const DenseMatrix& xv2 = t.value(x);
        const std::size_t n2 = av.rows();
        DenseMatrix s(n2, n2);
        for (std::size_t m = 0; m < n2; ++m)
            for (std::size_t k = 0; k < n2; ++k)
                s(m, k) = -inv * (g(m, k) * av(m, k) + g(k, m) * av(k, m));
        DenseMatrix sx = cumi::matmul(s, xv2);
        DenseMatrix& gx = adj[ix(x)];
        for (std::size_t m = 0; m < n2; ++m) {
            double rowsum = kern::sum(s.row(m), n2);
            for (std::size_t j = 0; j < xv2.cols(); ++j)
                gx(m, j) += 2.0 * (rowsum * xv2(m, j) - sx(m, j));
        }
    };
    return self;
}

NodeId Tape::spectral_scalar(NodeId a, SpectralFn fn, double param) {
    if (value(a).rows() != value(a).cols())
        throw DimensionError("spectral_scalar: matrix is not square");
    if (fn != SpectralFn::kPower)
        throw ContractError("spectral_scalar: unknown spectral function");
    EigenPair eig = sym_eig(value(a));
    std::vector<double> lam = eig.values;
    for (double& l : lam)
        if (l < kEigenvalueFloor) l = 0.0;
    double total = 0.0;
    for (double l : lam) total += std::pow(l, param);
    DenseMatrix out(1, 1);
    out(0, 0) = total;
    NodeId self = push(std::move(out), OpKind::kSpectralSum, {a}, nullptr);
    at(self).backward = [self, a, param, eig = std::move(eig),
                         lam = std::move(lam)](Tape&, std::vector<DenseMatrix>& adj) {
        const std::size_t n = lam.size();
        std::vector<double> deriv(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = param * std::pow(lam[i], param - 1.0);
            if (!std::isfinite(d))
                throw NumericError(
                    "spectral_scalar: derivative undefined at clamped eigenvalue " +
                    std::to_string(i));
            deriv[i] = d;
        }
        const double g = adj[ix(self)](0, 0);
        DenseMatrix& ga = adj[ix(a)];
        // U·diag(f'(λ))·Uᵀ scaled by the upstream gradient.
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += eig.vectors(r, k) * deriv[k] * eig.vectors(c, k);
                ga(r, c) += g * acc;
            }
    };
    return self;
}

NodeId Tape::softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
    const DenseMatrix& lv = value(logits);
    const std::size_t n = lv.rows();
    const std::size_t classes = lv.cols();
    if (labels.size() != n)
        throw ContractError("softmax_cross_entropy: one label per row required");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw ContractError("softmax_cross_entropy: label out of range");
    DenseMatrix probs(n, classes);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = lv(i, 0);
        for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, lv(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < classes; ++j) z += std::exp(lv(i, j) - mx);
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < classes; ++j)
            probs(i, j) = std::exp(lv(i, j) - lse);
        total += lse - lv(i, static_cast<std::size_t>(labels[i]));
    }
    DenseMatrix out(1, 1);
    out(0, 0) = total / static_cast<double>(n);
    NodeId self = push(std::move(out), OpKind::kSoftmaxCrossEntropy, {logits}, nullptr);
    at(self).backward = [self, logits, probs = std::move(probs),
                         labels = std::move(labels)](Tape&,
                                                     std::vector<DenseMatrix>& adj) {
        const double g = adj[ix(self)](0, 0);
        DenseMatrix& gl = adj[ix(logits)];
        const double invn = 1.0 / static_cast<double>(probs.rows());
        for (std::size_t i = 0; i < probs.rows(); ++i)
            for (std::size_t j = 0; j < probs.cols(); ++j) {
                const double onehot =
                    static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0;
                gl(i, j) += g * invn * (probs(i, j) - onehot);
            }
    };
    return self;
}

void Tape::zero_grad() {
    for (Node& n : nodes_) n.grad.fill(0.0);
}

void Tape::backward(NodeId loss) {
    const Node& ln = at(loss);
    if (!is_scalar(ln.value))
        throw ContractError("backward: loss must be a 1x1 scalar node");

    // Reachability from the loss through parent edges.
    std::vector<char> reachable(nodes_.size(), 0);
    std::vector<NodeId> stack{loss};
    reachable[ix(loss)] = 1;
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        for (NodeId p : nodes_[ix(id)].parents) {
            if (!reachable[ix(p)]) {
                reachable[ix(p)] = 1;
                stack.push_back(p);
            }
        }
    }

    // Fresh adjoints per call so that repeated calls accumulate exactly one
    // extra seed's worth of gradient.
    std::vector<DenseMatrix> adj(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (reachable[i]) adj[i] = DenseMatrix(nodes_[i].value.rows(), nodes_[i].value.cols());
    adj[ix(loss)](0, 0) = 1.0;

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (!reachable[i]) continue;
        Node& n = nodes_[i];
        if (n.backward) n.backward(*this, adj);
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (reachable[i]) nodes_[i].grad.add_in_place(adj[i]);
}

double grad_check(
    const std::function<NodeId(Tape&, std::span<const NodeId>)>& loss_builder,
    std::span<DenseMatrix> params, double eps) {
    auto eval = [&]() {
        Tape t;
        std::vector<NodeId> ids;
        ids.reserve(params.size());
        for (const DenseMatrix& p : params) ids.push_back(t.leaf(p));
        const NodeId loss = loss_builder(t, ids);
        return t.value(loss)(0, 0);
    };

    Tape t;
    std::vector<NodeId> ids;
    ids.reserve(params.size());
    for (const DenseMatrix& p : params) ids.push_back(t.leaf(p));
    const NodeId loss = loss_builder(t, ids);
    t.backward(loss);
    std::vector<DenseMatrix> analytic;
    analytic.reserve(params.size());
    for (NodeId id : ids) analytic.push_back(t.grad(id));

    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t e = 0; e < params[p].size(); ++e) {
            double& slot = params[p].data()[e];
            const double orig = slot;
            slot = orig + eps;
            const double fplus = eval();
            slot = orig - eps;
            const double fminus = eval();
            slot = orig;
            const double fd = (fplus - fminus) / (2.0 * eps);
            const double err =
                std::fabs(analytic[p].data()[e] - fd) / std::max(1.0, std::fabs(fd));
            if (err > worst) worst = err;
        }
    }
    return worst;
}

}  // namespace cumi
