#include "polyreach/network.hpp"

#include <cmath>
#include <random>
#include <string>

namespace polyreach {

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) {
        throw DimensionError("Box: lower and upper have different lengths");
    }
    if (lower_.size() == 0) {
        throw DimensionError("Box: zero dimension");
    }
    require_finite(lower_, "Box lower");
    require_finite(upper_, "Box upper");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (lower_(i) > upper_(i)) {
            throw Error("Box: lower > upper at coordinate " + std::to_string(i));
        }
    }
}

Box Box::symmetric(Eigen::Index dim, double radius) {
    return Box(Vector::Constant(dim, -radius), Vector::Constant(dim, radius));
}

double Box::volume() const { return widths().prod(); }

bool Box::contains(const Vector& x, double tol) const {
    return x.size() == dim() && ((x - lower_).array() >= -tol).all() &&
           ((upper_ - x).array() >= -tol).all();
}

SequentialReluNetwork::SequentialReluNetwork(std::vector<AffineLayer> layers)
    : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw Error("network: at least one affine layer is required");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        const std::string where = "layer " + std::to_string(i);
        if (layer.W.rows() != layer.b.size()) {
            throw DimensionError(where + ": W has " + std::to_string(layer.W.rows()) +
                                 " rows but b has length " + std::to_string(layer.b.size()));
        }
        if (layer.W.rows() == 0 || layer.W.cols() == 0) {
            throw DimensionError(where + ": empty weight matrix");
        }
        require_finite(layer.W, where + " W");
        require_finite(layer.b, where + " b");
        if (i > 0 && layer.W.cols() != layers_[i - 1].W.rows()) {
            throw DimensionError(where + ": expects input width " +
                                 std::to_string(layer.W.cols()) + " but previous layer outputs " +
                                 std::to_string(layers_[i - 1].W.rows()));
        }
    }
}

std::size_t SequentialReluNetwork::relu_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
        n += static_cast<std::size_t>(layers_[i].out_dim());
    }
    return n;
}

Vector SequentialReluNetwork::evaluate(const Vector& x) const {
    if (x.size() != input_dim()) {
        throw DimensionError("evaluate: input has length " + std::to_string(x.size()) +
                             ", network expects " + std::to_string(input_dim()));
    }
    Vector h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].apply(h);
        if (i + 1 < layers_.size()) {
            h = h.cwiseMax(0.0);
        }
    }
    return h;
}

SequentialReluNetwork SequentialReluNetwork::precompose(const Matrix& M, const Vector& t) const {
    if (M.rows() != input_dim() || t.size() != input_dim()) {
        throw DimensionError("precompose: map does not produce the network input width");
    }
    std::vector<AffineLayer> out = layers_;
    out.front().b = layers_.front().W * t + layers_.front().b;
    out.front().W = layers_.front().W * M;
    return SequentialReluNetwork(std::move(out));
}

SequentialReluNetwork SequentialReluNetwork::postcompose(const Matrix& M, const Vector& t) const {
    if (M.cols() != output_dim() || t.size() != M.rows()) {
        throw DimensionError("postcompose: map does not accept the network output width");
    }
    std::vector<AffineLayer> out = layers_;
    out.back().W = M * layers_.back().W;
    out.back().b = M * layers_.back().b + t;
    return SequentialReluNetwork(std::move(out));
}

Vector evaluate(const SequentialReluNetwork& net, const Vector& x) { return net.evaluate(x); }

void ControlledSystem::validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) {
        throw DimensionError("system: A must be square");
    }
    if (B.rows() != n) {
        throw DimensionError("system: B must have as many rows as A");
    }
    if (e.size() != n) {
        throw DimensionError("system: e must have length n");
    }
    require_finite(A, "system A");
    require_finite(B, "system B");
    require_finite(e, "system e");
    if (controller.input_dim() != n) {
        throw DimensionError("system: controller input width " +
                             std::to_string(controller.input_dim()) + " != state dimension " +
                             std::to_string(n));
    }
    if (controller.output_dim() != B.cols()) {
        throw DimensionError("system: controller output width " +
                             std::to_string(controller.output_dim()) + " != B columns " +
                             std::to_string(B.cols()));
    }
    if (generator && input_map) {
        throw Error("system: generator and input_map are mutually exclusive");
    }
    if (const auto& g = generator ? generator : input_map) {
        if (g->rows() != n || g->cols() != initial_box.dim()) {
            throw DimensionError("system: generator must be n x p with p the initial box dimension");
        }
        require_finite(*g, "system generator");
    } else if (initial_box.dim() != n) {
        throw DimensionError("system: initial box dimension != state dimension");
    }
}

Vector ControlledSystem::step(const Vector& x) const { return A * x + B * controller.evaluate(x) + e; }

Vector ControlledSystem::initial_state(const Vector& z) const {
    if (generator) {
        return *generator * z;
    }
    if (input_map) {
        return *input_map * z;
    }
    return z;
}

SequentialReluNetwork build_equivalent_step(const ControlledSystem& sys) {
    sys.validate();
    const Eigen::Index n = sys.state_dim();
    const auto layers = sys.controller.layers();

    // A purely affine controller needs no routing: F(x) = (A + B W) x + B b + e.
    if (layers.size() == 1) {
        return SequentialReluNetwork({AffineLayer{sys.A + sys.B * layers[0].W,
                                                  sys.B * layers[0].b + sys.e}});
    }

    std::vector<AffineLayer> out;
    out.reserve(layers.size());

    {
        const auto& first = layers.front();
        const Eigen::Index width = 2 * n + first.out_dim();
        AffineLayer l{Matrix::Zero(width, n), Vector::Zero(width)};
        l.W.topRows(n).setIdentity();
        l.W.middleRows(n, n) = -Matrix::Identity(n, n);
        l.W.bottomRows(first.out_dim()) = first.W;
        l.b.tail(first.out_dim()) = first.b;
        out.push_back(std::move(l));
    }

    for (std::size_t i = 1; i + 1 < layers.size(); ++i) {
        const auto& mid = layers[i];
        const Eigen::Index rows = 2 * n + mid.out_dim();
        const Eigen::Index cols = 2 * n + mid.in_dim();
        AffineLayer l{Matrix::Zero(rows, cols), Vector::Zero(rows)};
        l.W.topLeftCorner(2 * n, 2 * n).setIdentity();
        l.W.bottomRightCorner(mid.out_dim(), mid.in_dim()) = mid.W;
        l.b.tail(mid.out_dim()) = mid.b;
        out.push_back(std::move(l));
    }

    {
        const auto& last = layers.back();
        AffineLayer l{Matrix::Zero(n, 2 * n + last.in_dim()), sys.B * last.b + sys.e};
        l.W.leftCols(n) = sys.A;
        l.W.middleCols(n, n) = -sys.A;
        l.W.rightCols(last.in_dim()) = sys.B * last.W;
        out.push_back(std::move(l));
    }
    return SequentialReluNetwork(std::move(out));
}

SequentialReluNetwork unroll(const SequentialReluNetwork& step_net, std::size_t k) {
    if (k == 0) {
        throw Error("unroll: horizon must be at least 1");
    }
    if (step_net.input_dim() != step_net.output_dim()) {
        throw DimensionError("unroll: step network must map a space to itself");
    }
    const auto layers = step_net.layers();
    if (layers.size() == 1) {
        // Affine step: the k-fold composition is a single affine layer.
        AffineLayer acc = layers[0];
        for (std::size_t j = 1; j < k; ++j) {
            acc = AffineLayer{layers[0].W * acc.W, layers[0].W * acc.b + layers[0].b};
        }
        return SequentialReluNetwork({std::move(acc)});
    }

    std::vector<AffineLayer> out(layers.begin(), layers.end());
    out.reserve(k * (layers.size() - 1) + 1);
    for (std::size_t j = 1; j < k; ++j) {
        AffineLayer boundary = out.back();
        out.back() = AffineLayer{layers.front().W * boundary.W,
                                 layers.front().W * boundary.b + layers.front().b};
        out.insert(out.end(), layers.begin() + 1, layers.end());
    }
    return SequentialReluNetwork(std::move(out));
}

SequentialReluNetwork unrolled_closed_loop(const ControlledSystem& sys, std::size_t k) {
    SequentialReluNetwork net = unroll(build_equivalent_step(sys), k);
    if (sys.generator) {
        throw Error("unrolled_closed_loop: absorb the zonotope generator first");
    }
    if (sys.input_map) {
        return net.precompose(*sys.input_map, Vector::Zero(sys.input_map->rows()));
    }
    return net;
}

ControlledSystem absorb_zonotope(const ControlledSystem& sys) {
    if (!sys.generator) {
        throw Error("absorb_zonotope: system has no generator");
    }
    const Matrix& G = *sys.generator;
    if (G.cols() == 0) {
        throw DimensionError("absorb_zonotope: generator has no columns");
    }
    ControlledSystem out{sys.A, sys.B, sys.e, sys.controller, Box::symmetric(G.cols(), 1.0),
                         std::nullopt, G};
    out.validate();
    return out;
}

ControlledSystem without_input_map(const ControlledSystem& sys) {
    if (!sys.input_map) {
        return sys;
    }
    const Matrix& G = *sys.input_map;
    const Vector center = G * sys.initial_box.center();
    const Vector radius = G.cwiseAbs() * (0.5 * sys.initial_box.widths());
    return ControlledSystem{sys.A, sys.B, sys.e, sys.controller,
                            Box(center - radius, center + radius), std::nullopt, std::nullopt};
}

SequentialReluNetwork first_step_controller(const ControlledSystem& sys) {
    if (sys.input_map) {
        return sys.controller.precompose(*sys.input_map, Vector::Zero(sys.input_map->rows()));
    }
    return sys.controller;
}

Matrix first_step_state_matrix(const ControlledSystem& sys) {
    return sys.input_map ? Matrix(sys.A * *sys.input_map) : sys.A;
}

SequentialReluNetwork random_network(std::span<const Eigen::Index> widths, std::uint64_t seed,
                                     double bias_scale) {
    if (widths.size() < 2) {
        throw Error("random_network: need at least input and output widths");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<AffineLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const Eigen::Index in = widths[i];
        const Eigen::Index out = widths[i + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        AffineLayer l{Matrix(out, in), Vector(out)};
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) {
                l.W(r, c) = scale * normal(rng);
            }
        }
        for (Eigen::Index r = 0; r < out; ++r) {
            l.b(r) = bias_scale * normal(rng);
        }
        layers.push_back(std::move(l));
    }
    return SequentialReluNetwork(std::move(layers));
}

}  // namespace polyreach
