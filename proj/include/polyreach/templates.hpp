#pragma once

#include "polyreach/network.hpp"

#include <span>
#include <vector>

namespace polyreach {

/// Cosine-similarity threshold used for pruning unless configured otherwise.
inline constexpr double kDefaultLambda = 0.98;

/// Facet normals of a template polytope, one per row. Rows are never zero.
class TemplateMatrix {
public:
    TemplateMatrix() = default;
    /// Throws if any row is zero or non-finite.
    explicit TemplateMatrix(Matrix directions);
    static TemplateMatrix empty(Eigen::Index dim) { return TemplateMatrix(Matrix(0, dim)); }

    /// Rows +e_1, -e_1, ..., +e_n, -e_n.
    static TemplateMatrix box(Eigen::Index dim);

    const Matrix& directions() const { return d_; }
    Eigen::Index rows() const { return d_.rows(); }
    Eigen::Index dim() const { return d_.cols(); }

    TemplateMatrix stacked(const TemplateMatrix& below) const;

private:
    Matrix d_;
};

/// Tall full-column-rank hypothesis failed for an affine layer.
class RankDeficientError : public Error {
public:
    using Error::Error;
};

/// Directions for the image of Poly(C, d) under y = W x + b: rows of C W^+,
/// dropping any that W^+ annihilates, plus +-u_i for the left singular
/// vectors outside range(W) when W is tall.
TemplateMatrix affine_directions(const TemplateMatrix& C, const Matrix& W,
                                 double rank_tol = kDefaultRankTol);

/// Appends -e_1..-e_n (the facets y >= 0 of a ReLU output).
TemplateMatrix relu_directions(const TemplateMatrix& C, Eigen::Index n);

/// Keeps a row only if its signed cosine with every earlier kept row is at
/// most lambda.
TemplateMatrix prune_similar(const TemplateMatrix& C, double lambda);

/// Folds affine_directions over `layers`, following layer i with
/// relu_directions when relu_after[i] is set. No pruning.
TemplateMatrix layer_directions(const TemplateMatrix& C, std::span<const AffineLayer> layers,
                                const std::vector<bool>& relu_after,
                                double rank_tol = kDefaultRankTol);

/// Directions through a whole sequential ReLU network, pruned at lambda.
TemplateMatrix network_directions(const TemplateMatrix& C, const SequentialReluNetwork& net,
                                  double lambda = kDefaultLambda,
                                  double rank_tol = kDefaultRankTol);

/// Facet count before pruning when nothing is annihilated, counting each
/// +-u_i pair of a widening layer once: m + sum of hidden widths + sum of
/// positive width increases.
Eigen::Index directions_count_before_pruning(Eigen::Index m, std::span<const Eigen::Index> widths);
/// The mirrored -u_i rows on top of that count (one per unit of width
/// increase), so the actual pre-pruning row count is the sum of both.
Eigen::Index mirrored_directions_count(std::span<const Eigen::Index> widths);

/// True when {y : D y <= 0} = {0}, i.e. every Poly(D, d) is bounded.
bool directions_bound_every_offset(const TemplateMatrix& D);

/// Which branches contributed to a step template.
struct StepDirectionsInfo {
    Eigen::Index state_rows = 0;    // rows from the A branch
    Eigen::Index control_rows = 0;  // rows from the controller + B branch
    bool control_rank_deficient = false;
    bool axis_fallback = false;
};

/// Template for the next state: directions for A x joined with directions
/// for B f(x) (the controller with B as a final ReLU-free layer), pruned at
/// lambda. Axis directions are added when the result would not bound every
/// offset. For a system with an input_map the first-step maps (A G, W_0 G)
/// are used.
TemplateMatrix step_directions(const TemplateMatrix& C, const ControlledSystem& sys,
                               double lambda = kDefaultLambda, double rank_tol = kDefaultRankTol,
                               StepDirectionsInfo* info = nullptr);

}  // namespace polyreach
