#include "polyreach/bnb.hpp"

#include "polyreach/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace polyreach {

namespace {

bool heap_less(const BnBNode& a, const BnBNode& b) { return a.upper < b.upper; }

}  // namespace

void BnBProblem::validate() const {
    if (net == nullptr) {
        throw Error("bnb: no network");
    }
    if (c.size() != net->output_dim()) {
        throw DimensionError("bnb: objective length != network output width");
    }
    if (box.dim() != net->input_dim()) {
        throw DimensionError("bnb: box dimension != network input width");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw Error("bnb: epsilon must be positive and finite");
    }
    if (node_cap == 0) {
        throw Error("bnb: node cap must be positive");
    }
    require_finite(c, "bnb objective");
}

std::pair<BnBNode, BnBNode> branch(const BnBNode& node, const Vector& reference_widths) {
    const Vector widths = node.box.widths();
    if (reference_widths.size() != widths.size()) {
        throw DimensionError("branch: reference widths have the wrong length");
    }
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index j = 0; j < widths.size(); ++j) {
        if (reference_widths(j) <= 0.0 || widths(j) <= 0.0) {
            continue;
        }
        const double score = widths(j) / reference_widths(j);
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    if (best < 0) {
        throw Error("branch: box has zero width in every splittable dimension");
    }
    const double mid = 0.5 * (node.box.lower()(best) + node.box.upper()(best));
    Vector left_upper = node.box.upper();
    Vector right_lower = node.box.lower();
    left_upper(best) = mid;
    right_lower(best) = mid;
    return {BnBNode{Box(node.box.lower(), left_upper), node.upper, node.lower},
            BnBNode{Box(right_lower, node.box.upper()), node.upper, node.lower}};
}

std::pair<BnBNode, BnBNode> branch(const BnBNode& node) {
    return branch(node, Vector::Ones(node.box.dim()));
}

double lower_bound(const SequentialReluNetwork& net, const Vector& c, const Box& box) {
    if (box.dim() != net.input_dim() || c.size() != net.output_dim()) {
        throw DimensionError("lower_bound: dimension mismatch");
    }
    Vector x = box.center();
    double best = c.dot(net.evaluate(x));
    for (Eigen::Index j = 0; j < box.dim(); ++j) {
        if (box.lower()(j) == box.upper()(j)) {
            continue;
        }
        const double mid = x(j);
        for (const double v : {box.lower()(j), box.upper()(j)}) {
            x(j) = v;
            best = std::max(best, c.dot(net.evaluate(x)));
        }
        x(j) = mid;
    }
    return best;
}

BranchAndBound::BranchAndBound(BnBProblem problem)
    : problem_(std::move(problem)), reference_widths_(problem_.box.widths()) {
    problem_.validate();
    BnBNode root = make_node(problem_.box, std::numeric_limits<double>::infinity());
    global_lower_ = root.lower;
    iterations_ = 1;
    heap_.push_back(std::move(root));
    max_live_ = 1;
}

BnBNode BranchAndBound::make_node(Box box, double parent_upper) {
    const ObjectiveBound bound = bound_objective(*problem_.net, problem_.c, box);
    const double lower = std::max(lower_bound(*problem_.net, problem_.c, box),
                                  problem_.c.dot(problem_.net->evaluate(bound.corner)));
    double upper = std::min(bound.upper, parent_upper);
    // An exact evaluation inside the box can only exceed a sound bound by rounding.
    upper = std::max(upper, lower);
    return BnBNode{std::move(box), upper, lower};
}

double BranchAndBound::global_upper() const {
    double upper = global_lower_;
    if (!heap_.empty()) {
        upper = std::max(upper, heap_.front().upper);
    }
    if (settled_upper_) {
        upper = std::max(upper, *settled_upper_);
    }
    return upper;
}

void BranchAndBound::push(BnBNode node) {
    if (node.upper <= global_lower_) {
        pruned_volume_ += node.box.volume();
        return;
    }
    heap_.push_back(std::move(node));
    std::push_heap(heap_.begin(), heap_.end(), heap_less);
}

void BranchAndBound::prune() {
    const auto dead = std::partition(heap_.begin(), heap_.end(), [&](const BnBNode& n) {
        return n.upper > global_lower_;
    });
    for (auto it = dead; it != heap_.end(); ++it) {
        pruned_volume_ += it->box.volume();
    }
    if (dead != heap_.end()) {
        heap_.erase(dead, heap_.end());
    }
    std::make_heap(heap_.begin(), heap_.end(), heap_less);
}

bool BranchAndBound::step() {
    if (converged() || heap_.empty()) {
        return false;
    }
    std::pop_heap(heap_.begin(), heap_.end(), heap_less);
    BnBNode node = std::move(heap_.back());
    heap_.pop_back();

    const Vector widths = node.box.widths();
    bool splittable = false;
    for (Eigen::Index j = 0; j < widths.size(); ++j) {
        splittable = splittable || (reference_widths_(j) > 0.0 && widths(j) > 0.0);
    }
    if (!splittable) {
        // A point box is bounded exactly up to rounding.
        settled_upper_ = std::max(settled_upper_.value_or(node.upper), node.upper);
        ++iterations_;
        return true;
    }

    auto [left, right] = branch(node, reference_widths_);
    BnBNode children[2] = {make_node(std::move(left.box), node.upper),
                           make_node(std::move(right.box), node.upper)};
    ++iterations_;

    const double previous_lower = global_lower_;
    for (const auto& child : children) {
        global_lower_ = std::max(global_lower_, child.lower);
    }
    for (auto& child : children) {
        push(std::move(child));
    }
    if (global_lower_ > previous_lower) {
        prune();
    }
    max_live_ = std::max(max_live_, heap_.size());
    return true;
}

BnBResult BranchAndBound::result() const {
    return BnBResult{global_lower_, global_upper(), iterations_, max_live_};
}

BnBResult BranchAndBound::solve() {
    while (!converged()) {
        if (iterations_ >= problem_.node_cap) {
            throw BnBCapExceeded("bnb: node cap of " + std::to_string(problem_.node_cap) +
                                     " reached before the gap closed",
                                 result());
        }
        if (!step()) {
            break;
        }
    }
    return result();
}

BnBResult maximize(const BnBProblem& problem) { return BranchAndBound(problem).solve(); }

}  // namespace polyreach
