#pragma once

#include "polyreach/network.hpp"

#include <vector>

namespace polyreach {

/// Concrete bounds on the pre-activation values of one affine layer.
struct NeuronBounds {
    Vector l;
    Vector u;
};

/// Linear functions of the network input enclosing one layer's values:
/// lower_coeffs x + lower_offset <= value <= upper_coeffs x + upper_offset.
struct SymbolicBound {
    Matrix lower_coeffs;
    Vector lower_offset;
    Matrix upper_coeffs;
    Vector upper_offset;
};

/// Per-neuron linear relaxation of y = ReLU(x) given x in [l, u]:
/// lower_slope * x <= y <= upper_slope * x + upper_offset.
struct ReluRelaxation {
    Vector lower_slope;
    Vector upper_slope;
    Vector upper_offset;
};

/// Triangle upper bound and the minimal-area choice of lower slope
/// (1 when u >= -l, else 0); stable neurons are exact.
ReluRelaxation relax_relu(const NeuronBounds& pre);

/// Sound pre-activation bounds for every affine layer over `box`, computed by
/// back-substituting each layer's symbolic bounds down to the input.
std::vector<NeuronBounds> propagate(const SequentialReluNetwork& net, const Box& box);

/// Symbolic input-space bounds for the output of the last layer, given the
/// concrete bounds of all hidden layers (as returned by propagate).
SymbolicBound output_symbolic_bounds(const SequentialReluNetwork& net,
                                     const std::vector<NeuronBounds>& hidden);

/// Sound upper bound on max over box of c^T net(x).
double upper_bound_objective(const SequentialReluNetwork& net, const Vector& c, const Box& box);

struct ObjectiveBound {
    double upper;
    /// Box corner maximizing the back-substituted linear upper form; a good
    /// place to look for a large exact value.
    Vector corner;
};

ObjectiveBound bound_objective(const SequentialReluNetwork& net, const Vector& c, const Box& box);

}  // namespace polyreach
