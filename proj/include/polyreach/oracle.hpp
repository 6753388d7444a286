#pragma once

#include "polyreach/lp.hpp"
#include "polyreach/network.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace polyreach {

/// Active/inactive flag for every ReLU neuron, layer by layer.
using ActivationPattern = std::vector<bool>;

inline constexpr std::size_t kMaxOracleNeurons = 24;

struct ExactMaxResult {
    double value = 0.0;
    Vector argmax;
    ActivationPattern pattern;
    /// Patterns accounted for; always 2^(ReLU count). Patterns under an
    /// infeasible prefix are counted without solving their LP.
    std::uint64_t patterns_visited = 0;
    std::uint64_t feasible_patterns = 0;
    std::uint64_t lps_solved = 0;
};

/// Exact max over box of c^T net(x) by activation-pattern enumeration: each
/// pattern fixes an affine map, maximized by LP under the box and the
/// pattern's sign constraints (both sides closed). Neurons are assigned in
/// order and infeasible prefixes are cut with a feasibility LP.
ExactMaxResult exact_maximize(const SequentialReluNetwork& net, const Vector& c, const Box& box);

/// States x^0..x^horizon of sampled trajectories; points[k][s] is sample s
/// at step k.
struct Trajectories {
    std::vector<std::vector<Vector>> points;
};

/// Samples the initial set uniformly (through G when present) with a seeded
/// generator and iterates the closed loop exactly.
Trajectories simulate(const ControlledSystem& sys, std::size_t n_samples, std::size_t horizon,
                      std::uint64_t seed);

}  // namespace polyreach
