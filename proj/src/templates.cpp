#include "polyreach/templates.hpp"

#include "polyreach/lp.hpp"

#include <string>

namespace polyreach {

TemplateMatrix::TemplateMatrix(Matrix directions) : d_(std::move(directions)) {
    require_finite(d_, "template directions");
    for (Eigen::Index i = 0; i < d_.rows(); ++i) {
        if (d_.row(i).isZero(0.0)) {
            throw Error("template directions: row " + std::to_string(i) + " is zero");
        }
    }
}

TemplateMatrix TemplateMatrix::box(Eigen::Index dim) {
    Matrix d = Matrix::Zero(2 * dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        d(2 * i, i) = 1.0;
        d(2 * i + 1, i) = -1.0;
    }
    return TemplateMatrix(std::move(d));
}

TemplateMatrix TemplateMatrix::stacked(const TemplateMatrix& below) const {
    if (below.dim() != dim()) {
        throw DimensionError("template stack: column counts differ");
    }
    Matrix d(rows() + below.rows(), dim());
    d << d_, below.d_;
    return TemplateMatrix(std::move(d));
}

TemplateMatrix affine_directions(const TemplateMatrix& C, const Matrix& W, double rank_tol) {
    const Eigen::Index n1 = W.rows();
    const Eigen::Index n0 = W.cols();
    if (C.dim() != n0) {
        throw DimensionError("affine_directions: template has " + std::to_string(C.dim()) +
                             " columns, layer input width is " + std::to_string(n0));
    }
    const SvdResult f = svd(W);
    const auto rank = static_cast<Eigen::Index>(numerical_rank(f.singular_values, rank_tol));
    if (n1 > n0 && rank < n0) {
        throw RankDeficientError("affine_directions: tall " + std::to_string(n1) + "x" +
                                 std::to_string(n0) + " layer has column rank " +
                                 std::to_string(rank));
    }

    Matrix w_pinv = Matrix::Zero(n0, n1);
    for (Eigen::Index i = 0; i < rank; ++i) {
        w_pinv.noalias() += (f.V.col(i) / f.singular_values(i)) * f.U.col(i).transpose();
    }
    const Matrix image = C.directions() * w_pinv;

    // A row counts as annihilated when it is at rounding level relative to
    // what W^+ could have made of it.
    const double gain = rank > 0 ? 1.0 / f.singular_values(rank - 1) : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < image.rows(); ++i) {
        if (image.row(i).norm() > 1e-10 * gain * C.directions().row(i).norm()) {
            keep.push_back(i);
        }
    }
    const Eigen::Index extra = n1 > n0 ? 2 * (n1 - n0) : 0;
    Matrix out(static_cast<Eigen::Index>(keep.size()) + extra, n1);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = image.row(keep[r]);
    }
    for (Eigen::Index i = n0, r = static_cast<Eigen::Index>(keep.size()); i < n1; ++i) {
        out.row(r++) = f.U.col(i).transpose();
        out.row(r++) = -f.U.col(i).transpose();
    }
    return TemplateMatrix(std::move(out));
}

TemplateMatrix relu_directions(const TemplateMatrix& C, Eigen::Index n) {
    if (C.dim() != n) {
        throw DimensionError("relu_directions: template width != layer width");
    }
    Matrix out(C.rows() + n, n);
    out.topRows(C.rows()) = C.directions();
    out.bottomRows(n) = -Matrix::Identity(n, n);
    return TemplateMatrix(std::move(out));
}

TemplateMatrix prune_similar(const TemplateMatrix& C, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw Error("prune_similar: lambda must lie in (0, 1]");
    }
    const Matrix& d = C.directions();
    std::vector<Eigen::Index> kept;
    std::vector<Vector> unit;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const Vector row = d.row(i).transpose();
        const Vector u = row / row.norm();
        bool similar = false;
        for (const Vector& k : unit) {
            if (std::min(1.0, u.dot(k)) > lambda) {
                similar = true;
                break;
            }
        }
        if (!similar) {
            kept.push_back(i);
            unit.push_back(u);
        }
    }
    Matrix out(static_cast<Eigen::Index>(kept.size()), d.cols());
    for (std::size_t r = 0; r < kept.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = d.row(kept[r]);
    }
    return TemplateMatrix(std::move(out));
}

TemplateMatrix layer_directions(const TemplateMatrix& C, std::span<const AffineLayer> layers,
                                const std::vector<bool>& relu_after, double rank_tol) {
    if (relu_after.size() != layers.size()) {
        throw DimensionError("layer_directions: one ReLU flag per layer is required");
    }
    TemplateMatrix d = C;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        d = affine_directions(d, layers[i].W, rank_tol);
        if (relu_after[i]) {
            d = relu_directions(d, layers[i].out_dim());
        }
    }
    return d;
}

TemplateMatrix network_directions(const TemplateMatrix& C, const SequentialReluNetwork& net,
                                  double lambda, double rank_tol) {
    if (C.dim() != net.input_dim()) {
        throw DimensionError("network_directions: template width != network input width");
    }
    std::vector<bool> relu_after(net.depth(), true);
    relu_after.back() = false;
    return prune_similar(layer_directions(C, net.layers(), relu_after, rank_tol), lambda);
}

Eigen::Index directions_count_before_pruning(Eigen::Index m, std::span<const Eigen::Index> widths) {
    if (widths.size() < 2) {
        throw Error("directions_count_before_pruning: need input and output widths");
    }
    const std::size_t L = widths.size() - 1;
    Eigen::Index count = m;
    for (std::size_t i = 1; i < L; ++i) {
        count += widths[i];
    }
    for (std::size_t i = 1; i <= L; ++i) {
        count += std::max<Eigen::Index>(widths[i] - widths[i - 1], 0);
    }
    return count;
}

Eigen::Index mirrored_directions_count(std::span<const Eigen::Index> widths) {
    Eigen::Index count = 0;
    for (std::size_t i = 1; i < widths.size(); ++i) {
        count += std::max<Eigen::Index>(widths[i] - widths[i - 1], 0);
    }
    return count;
}

bool directions_bound_every_offset(const TemplateMatrix& D) {
    const Eigen::Index n = D.dim();
    if (D.rows() == 0) {
        return false;
    }
    // Any nonzero y with D y <= 0 can be scaled into the unit box.
    LpProblem p{Vector::Zero(n), Matrix(D.rows() + 2 * n, n), Vector::Zero(D.rows() + 2 * n)};
    p.constraints.topRows(D.rows()) = D.directions().rowwise().normalized();
    p.constraints.middleRows(D.rows(), n) = Matrix::Identity(n, n);
    p.constraints.bottomRows(n) = -Matrix::Identity(n, n);
    p.rhs.tail(2 * n).setOnes();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (const double sign : {1.0, -1.0}) {
            p.objective.setZero();
            p.objective(j) = sign;
            const LpResult r = lp_maximize(p);
            if (r.status != LpStatus::Optimal || r.value > 1e-7) {
                return false;
            }
        }
    }
    return true;
}

TemplateMatrix step_directions(const TemplateMatrix& C, const ControlledSystem& sys,
                               double lambda, double rank_tol, StepDirectionsInfo* info) {
    sys.validate();
    StepDirectionsInfo local;
    StepDirectionsInfo& stats = info != nullptr ? *info : local;
    stats = StepDirectionsInfo{};
    const Eigen::Index n = sys.state_dim();

    TemplateMatrix state = TemplateMatrix::empty(n);
    try {
        state = affine_directions(C, first_step_state_matrix(sys), rank_tol);
    } catch (const RankDeficientError&) {
    }

    TemplateMatrix control = TemplateMatrix::empty(n);
    try {
        const SequentialReluNetwork f = first_step_controller(sys);
        std::vector<AffineLayer> layers(f.layers().begin(), f.layers().end());
        layers.push_back(AffineLayer{sys.B, Vector::Zero(n)});
        std::vector<bool> relu_after(layers.size(), true);
        relu_after[layers.size() - 2] = false;
        relu_after.back() = false;
        control = prune_similar(layer_directions(C, layers, relu_after, rank_tol), lambda);
    } catch (const RankDeficientError&) {
        stats.control_rank_deficient = true;
    }
    stats.state_rows = state.rows();
    stats.control_rows = control.rows();

    TemplateMatrix out = prune_similar(state.stacked(control), lambda);
    if (!directions_bound_every_offset(out)) {
        stats.axis_fallback = true;
        const Matrix& d = out.directions();
        const TemplateMatrix axes = TemplateMatrix::box(n);
        std::vector<Eigen::Index> fresh;
        for (Eigen::Index a = 0; a < axes.rows(); ++a) {
            bool present = false;
            for (Eigen::Index i = 0; i < d.rows() && !present; ++i) {
                present = cosine_similarity(d.row(i).transpose(),
                                            axes.directions().row(a).transpose()) >= 1.0 - 1e-12;
            }
            if (!present) {
                fresh.push_back(a);
            }
        }
        Matrix extra(static_cast<Eigen::Index>(fresh.size()), n);
        for (std::size_t r = 0; r < fresh.size(); ++r) {
            extra.row(static_cast<Eigen::Index>(r)) = axes.directions().row(fresh[r]);
        }
        out = out.stacked(TemplateMatrix(std::move(extra)));
    }
    return out;
}

}  // namespace polyreach
