#pragma once

#include "polyreach/bnb.hpp"
#include "polyreach/templates.hpp"

#include <chrono>
#include <cstddef>
#include <functional>
#include <vector>

namespace polyreach {

/// Poly(C, d) = {x : C x <= d}.
struct Polytope {
    TemplateMatrix C;
    Vector d;

    /// The box as rows +e_i <= upper_i, -e_i <= -lower_i.
    static Polytope from_box(const Box& box);
    Eigen::Index dim() const { return C.dim(); }
    void validate() const;
};

bool contains(const Polytope& poly, const Vector& x, double tol);

struct DirectionStats {
    std::size_t step;       // k
    std::size_t direction;  // row index in C^k
    BnBResult bnb;
};

struct ReachOptions {
    double epsilon = 0.01;
    double lambda = kDefaultLambda;
    double rank_tol = kDefaultRankTol;
    std::size_t node_cap = kDefaultNodeCap;
    /// Worker threads for per-direction solves; 0 picks the hardware count.
    unsigned threads = 0;
    /// Called after each completed step with (k, polytope).
    std::function<void(std::size_t, const Polytope&)> on_step;
};

struct ReachResult {
    /// polytopes[k] over-approximates the states at step k. polytopes[0] is
    /// the initial box (in z for a zonotope initial set).
    std::vector<Polytope> polytopes;
    std::vector<DirectionStats> per_direction_stats;
    std::chrono::duration<double> wall_time{0.0};

    std::size_t direction_solves() const { return per_direction_stats.size(); }
};

/// A direction solve hit the node cap; `partial` holds every completed step.
class ReachAborted : public Error {
public:
    ReachAborted(const std::string& what, std::size_t step, std::size_t direction,
                 ReachResult partial)
        : Error(what), step(step), direction(direction), partial(std::move(partial)) {}
    std::size_t step;
    std::size_t direction;
    ReachResult partial;
};

/// Template C^k from C^(k-1) via step_directions; offsets d^k_i as the BnB
/// upper bound of c_i^T F_eq^(k)(x) over the initial box.
ReachResult reach(const ControlledSystem& sys, std::size_t horizon, const ReachOptions& options);

}  // namespace polyreach
