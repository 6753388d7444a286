#pragma once

#include "polyreach/network.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace polyreach {

inline constexpr std::size_t kDefaultNodeCap = 1'000'000;

/// maximize c^T net(x) over box to an absolute gap of epsilon.
struct BnBProblem {
    const SequentialReluNetwork* net;
    Vector c;
    Box box;
    double epsilon;
    std::size_t node_cap = kDefaultNodeCap;

    void validate() const;
};

struct BnBNode {
    Box box;
    double upper;
    double lower;
};

struct BnBResult {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t iterations = 0;
    std::size_t max_live_nodes = 0;
};

/// Raised when the node cap is hit; `partial` holds sound but not
/// epsilon-tight bounds.
class BnBCapExceeded : public Error {
public:
    BnBCapExceeded(const std::string& what, BnBResult partial)
        : Error(what), partial(partial) {}
    BnBResult partial;
};

/// Midpoint bisection of the widest side, widths normalized by `reference`
/// (the root box widths); ties go to the lowest index. Sides with zero
/// reference width are never split.
std::pair<BnBNode, BnBNode> branch(const BnBNode& node, const Vector& reference_widths);
/// Same with the node's own widths as reference.
std::pair<BnBNode, BnBNode> branch(const BnBNode& node);

/// Best exact value of c^T net(x) over the box center and the 2*dim centers
/// of its faces.
double lower_bound(const SequentialReluNetwork& net, const Vector& c, const Box& box);

/// Best-first branch and bound on node upper bounds. A node's lower bound is
/// lower_bound() raised by the exact value at the corner that maximizes its
/// linear upper form. Exposed step by step so
/// callers (and tests) can inspect the partition.
class BranchAndBound {
public:
    explicit BranchAndBound(BnBProblem problem);

    bool converged() const { return global_upper() - global_lower_ <= problem_.epsilon; }
    /// Expands the best live node. Returns false when converged or no live
    /// node is left.
    bool step();
    /// Runs to convergence; throws BnBCapExceeded past node_cap iterations.
    BnBResult solve();

    double global_lower() const { return global_lower_; }
    double global_upper() const;
    std::size_t iterations() const { return iterations_; }
    const std::vector<BnBNode>& live_nodes() const { return heap_; }
    double pruned_volume() const { return pruned_volume_; }
    BnBResult result() const;

private:
    void push(BnBNode node);
    BnBNode make_node(Box box, double parent_upper);
    void prune();

    BnBProblem problem_;
    Vector reference_widths_;
    std::vector<BnBNode> heap_;
    double global_lower_;
    // Upper bound contributed by nodes that can no longer be split.
    std::optional<double> settled_upper_;
    double pruned_volume_ = 0.0;
    std::size_t iterations_ = 0;
    std::size_t max_live_ = 0;
};

BnBResult maximize(const BnBProblem& problem);

}  // namespace polyreach
