#include "polyreach/bounds.hpp"

#include <string>

namespace polyreach {

namespace {

enum class Side { Lower, Upper };

// Linear form coeffs * x + offset over the network input, one row per bounded
// quantity.
struct LinearForm {
    Matrix coeffs;
    Vector offset;
};

// Rewrites `form`, given over the pre-activations of layer `layer`, as a
// bound over the network input by walking back through the affine layers and
// the ReLU relaxations in `relax` (relax[i] relaxes the output of layer i).
LinearForm back_substitute(const SequentialReluNetwork& net,
                           const std::vector<ReluRelaxation>& relax, std::size_t layer,
                           LinearForm form, Side side) {
    const auto layers = net.layers();
    for (std::size_t i = layer + 1; i-- > 0;) {
        form.offset.noalias() += form.coeffs * layers[i].b;
        form.coeffs = form.coeffs * layers[i].W;
        if (i == 0) {
            break;
        }
        const ReluRelaxation& r = relax[i - 1];
        const Matrix pos = form.coeffs.cwiseMax(0.0);
        const Matrix neg = form.coeffs.cwiseMin(0.0);
        if (side == Side::Upper) {
            form.offset.noalias() += pos * r.upper_offset;
            form.coeffs = pos * r.upper_slope.asDiagonal() + neg * r.lower_slope.asDiagonal();
        } else {
            form.offset.noalias() += neg * r.upper_offset;
            form.coeffs = pos * r.lower_slope.asDiagonal() + neg * r.upper_slope.asDiagonal();
        }
    }
    return form;
}

Vector concretize(const LinearForm& form, const Box& box, Side side) {
    const Matrix pos = form.coeffs.cwiseMax(0.0);
    const Matrix neg = form.coeffs.cwiseMin(0.0);
    if (side == Side::Upper) {
        return form.offset + pos * box.upper() + neg * box.lower();
    }
    return form.offset + pos * box.lower() + neg * box.upper();
}

// Interval bounds on layer `layer` from the concrete pre-activation bounds of
// the layer before it (post-ReLU range [max(l, 0), max(u, 0)]).
NeuronBounds interval_step(const AffineLayer& l, const NeuronBounds& prev) {
    const Vector lo = prev.l.cwiseMax(0.0);
    const Vector hi = prev.u.cwiseMax(0.0);
    const Matrix pos = l.W.cwiseMax(0.0);
    const Matrix neg = l.W.cwiseMin(0.0);
    return NeuronBounds{l.b + pos * lo + neg * hi, l.b + pos * hi + neg * lo};
}

// Back-substituted bounds, intersected with the interval step from the
// previous layer (which is what keeps ReLU outputs non-negative).
NeuronBounds bound_layer(const SequentialReluNetwork& net, const std::vector<ReluRelaxation>& relax,
                         const std::vector<NeuronBounds>& previous, std::size_t layer,
                         const Box& box) {
    const Eigen::Index width = net.layers()[layer].out_dim();
    const LinearForm id{Matrix::Identity(width, width), Vector::Zero(width)};
    NeuronBounds nb{
        concretize(back_substitute(net, relax, layer, id, Side::Lower), box, Side::Lower),
        concretize(back_substitute(net, relax, layer, id, Side::Upper), box, Side::Upper)};
    if (layer > 0) {
        const NeuronBounds ib = interval_step(net.layers()[layer], previous[layer - 1]);
        nb.l = nb.l.cwiseMax(ib.l);
        nb.u = nb.u.cwiseMin(ib.u);
    }
    // Rounding can leave l a hair above u for a constant neuron.
    nb.l = nb.l.cwiseMin(nb.u);
    return nb;
}

void check_box(const SequentialReluNetwork& net, const Box& box) {
    if (box.dim() != net.input_dim()) {
        throw DimensionError("bounds: box dimension " + std::to_string(box.dim()) +
                             " != network input width " + std::to_string(net.input_dim()));
    }
}

// Bounds and relaxations for every layer followed by a ReLU.
std::vector<NeuronBounds> hidden_bounds(const SequentialReluNetwork& net, const Box& box,
                                        std::vector<ReluRelaxation>& relax) {
    std::vector<NeuronBounds> out;
    out.reserve(net.depth());
    relax.clear();
    for (std::size_t i = 0; i + 1 < net.depth(); ++i) {
        out.push_back(bound_layer(net, relax, out, i, box));
        relax.push_back(relax_relu(out.back()));
    }
    return out;
}

}  // namespace

ReluRelaxation relax_relu(const NeuronBounds& pre) {
    const Eigen::Index n = pre.l.size();
    ReluRelaxation r{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        const double l = pre.l(j);
        const double u = pre.u(j);
        if (l >= 0.0) {
            r.lower_slope(j) = 1.0;
            r.upper_slope(j) = 1.0;
        } else if (u <= 0.0) {
            // constant zero
        } else {
            const double slope = u / (u - l);
            r.upper_slope(j) = slope;
            r.upper_offset(j) = -slope * l;
            r.lower_slope(j) = (u >= -l) ? 1.0 : 0.0;
        }
    }
    return r;
}

std::vector<NeuronBounds> propagate(const SequentialReluNetwork& net, const Box& box) {
    check_box(net, box);
    std::vector<ReluRelaxation> relax;
    std::vector<NeuronBounds> out = hidden_bounds(net, box, relax);
    out.push_back(bound_layer(net, relax, out, net.depth() - 1, box));
    return out;
}

SymbolicBound output_symbolic_bounds(const SequentialReluNetwork& net,
                                     const std::vector<NeuronBounds>& hidden) {
    if (hidden.size() + 1 < net.depth()) {
        throw DimensionError("output_symbolic_bounds: missing hidden layer bounds");
    }
    std::vector<ReluRelaxation> relax;
    for (std::size_t i = 0; i + 1 < net.depth(); ++i) {
        relax.push_back(relax_relu(hidden[i]));
    }
    const Eigen::Index width = net.output_dim();
    const LinearForm id{Matrix::Identity(width, width), Vector::Zero(width)};
    LinearForm lo = back_substitute(net, relax, net.depth() - 1, id, Side::Lower);
    LinearForm up = back_substitute(net, relax, net.depth() - 1, id, Side::Upper);
    return SymbolicBound{std::move(lo.coeffs), std::move(lo.offset), std::move(up.coeffs),
                         std::move(up.offset)};
}

double upper_bound_objective(const SequentialReluNetwork& net, const Vector& c, const Box& box) {
    return bound_objective(net, c, box).upper;
}

ObjectiveBound bound_objective(const SequentialReluNetwork& net, const Vector& c, const Box& box) {
    check_box(net, box);
    if (c.size() != net.output_dim()) {
        throw DimensionError("upper_bound_objective: objective length != network output width");
    }
    std::vector<ReluRelaxation> relax;
    const std::vector<NeuronBounds> hidden = hidden_bounds(net, box, relax);
    // Equivalent to folding c^T into the last affine layer and bounding that.
    const LinearForm objective{c.transpose(), Vector::Zero(1)};
    const LinearForm form = back_substitute(net, relax, net.depth() - 1, objective, Side::Upper);
    double bound = concretize(form, box, Side::Upper)(0);
    if (!hidden.empty()) {
        const AffineLayer& last = net.layers().back();
        const AffineLayer folded{c.transpose() * last.W, (Vector(1) << c.dot(last.b)).finished()};
        bound = std::min(bound, interval_step(folded, hidden.back()).u(0));
    }
    Vector corner(box.dim());
    for (Eigen::Index j = 0; j < box.dim(); ++j) {
        corner(j) = form.coeffs(0, j) >= 0.0 ? box.upper()(j) : box.lower()(j);
    }
    return ObjectiveBound{bound, std::move(corner)};
}

}  // namespace polyreach
