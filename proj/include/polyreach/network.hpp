#pragma once

#include "polyreach/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace polyreach {

/// y = W x + b
struct AffineLayer {
    Matrix W;
    Vector b;

    Eigen::Index in_dim() const { return W.cols(); }
    Eigen::Index out_dim() const { return W.rows(); }
    Vector apply(const Vector& x) const { return W * x + b; }
};

/// Axis-aligned box [lower, upper].
class Box {
public:
    Box(Vector lower, Vector upper);

    /// [-r, r]^dim
    static Box symmetric(Eigen::Index dim, double radius);

    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    Eigen::Index dim() const { return lower_.size(); }
    Vector center() const { return 0.5 * (lower_ + upper_); }
    Vector widths() const { return upper_ - lower_; }
    double volume() const;
    bool contains(const Vector& x, double tol = 0.0) const;

private:
    Vector lower_;
    Vector upper_;
};

/// Affine layers with a ReLU between each consecutive pair and none after the
/// last one. Immutable once built.
class SequentialReluNetwork {
public:
    explicit SequentialReluNetwork(std::vector<AffineLayer> layers);

    std::span<const AffineLayer> layers() const { return layers_; }
    std::size_t depth() const { return layers_.size(); }
    Eigen::Index input_dim() const { return layers_.front().in_dim(); }
    Eigen::Index output_dim() const { return layers_.back().out_dim(); }
    /// Total number of ReLU neurons (outputs of every layer but the last).
    std::size_t relu_count() const;

    Vector evaluate(const Vector& x) const;

    /// Network computing net(M x + t); M is folded into the first layer.
    SequentialReluNetwork precompose(const Matrix& M, const Vector& t) const;
    /// Network computing M net(x) + t; M is folded into the last layer.
    SequentialReluNetwork postcompose(const Matrix& M, const Vector& t) const;

private:
    std::vector<AffineLayer> layers_;
};

Vector evaluate(const SequentialReluNetwork& net, const Vector& x);

/// x+ = A x + B f(x) + e with controller f, starting from a box or zonotope.
///
/// `generator` holds a zonotope generator G that has not been absorbed yet
/// (initial set {G z : z in initial_box}). `input_map` holds one that has
/// been absorbed: the first closed-loop step reads x0 = input_map * z, and
/// every later step acts on the plain state.
struct ControlledSystem {
    Matrix A;
    Matrix B;
    Vector e;
    SequentialReluNetwork controller;
    Box initial_box;
    std::optional<Matrix> generator;
    std::optional<Matrix> input_map;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index control_dim() const { return B.cols(); }
    /// Dimension of the variable the initial box lives in.
    Eigen::Index initial_dim() const { return initial_box.dim(); }

    /// Throws DimensionError/Error on any inconsistency.
    void validate() const;

    /// One exact closed-loop step.
    Vector step(const Vector& x) const;
    /// Maps a point of the initial box to a state (applies G if present).
    Vector initial_state(const Vector& z) const;
};

/// Skip-free network F_eq with F_eq(x) = A x + B f(x) + e, routing the state
/// through the ReLU layers as ReLU(x) - ReLU(-x). Input is always the plain
/// state; input_map is not applied here.
SequentialReluNetwork build_equivalent_step(const ControlledSystem& sys);

/// k-fold composition of a square network, with boundary affine maps merged.
SequentialReluNetwork unroll(const SequentialReluNetwork& step_net, std::size_t k);

/// Closed-loop network over the initial variable after k steps: the unrolled
/// F_eq with input_map folded into its first layer when present.
SequentialReluNetwork unrolled_closed_loop(const ControlledSystem& sys, std::size_t k);

/// Moves a zonotope generator into the formulation: initial box becomes
/// [-1, 1]^p and G becomes the system's input_map.
ControlledSystem absorb_zonotope(const ControlledSystem& sys);

/// Same dynamics over the plain state: input_map dropped and the initial box
/// replaced by the interval hull of input_map * initial_box.
ControlledSystem without_input_map(const ControlledSystem& sys);

/// The controller as seen from the initial variable of the first step
/// (first layer W_0 G when an input_map is present).
SequentialReluNetwork first_step_controller(const ControlledSystem& sys);
/// State matrix as seen from the initial variable of the first step (A G).
Matrix first_step_state_matrix(const ControlledSystem& sys);

/// Network with Gaussian weights scaled by 1/sqrt(fan_in) and small biases.
/// `widths` lists every layer width including input and output.
SequentialReluNetwork random_network(std::span<const Eigen::Index> widths, std::uint64_t seed,
                                     double bias_scale = 0.1);

}  // namespace polyreach
