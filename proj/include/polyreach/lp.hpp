#pragma once

#include "polyreach/linalg.hpp"

namespace polyreach {

/// maximize objective^T x subject to constraints * x <= rhs, x free.
struct LpProblem {
    Vector objective;
    Matrix constraints;
    Vector rhs;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vector witness;  // empty unless Optimal
};

/// Dense two-phase simplex with Bland's rule. The optimal witness is
/// re-solved from the final basis and checked against the constraints;
/// a failed check raises NumericalError rather than returning a status.
LpResult lp_maximize(const LpProblem& problem);

const char* to_string(LpStatus status);

}  // namespace polyreach
