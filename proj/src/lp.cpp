#include "polyreach/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace polyreach {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;
constexpr double kCheckTol = 1e-8;
constexpr int kMaxPivots = 200000;

// Standard-form tableau for  Aeq z = b, z >= 0, b >= 0, with one basic
// variable per row.
class Tableau {
public:
    Tableau(Matrix a, Vector b, std::vector<Eigen::Index> basis)
        : t_(std::move(a)), rhs_(std::move(b)), basis_(std::move(basis)) {}

    enum class Outcome { Optimal, Unbounded };

    // Maximizes cost^T z over columns with allowed[j] true.
    Outcome maximize(const Vector& cost, const std::vector<bool>& allowed) {
        for (int iter = 0; iter < kMaxPivots; ++iter) {
            const Eigen::Index enter = entering(cost, allowed);
            if (enter < 0) {
                return Outcome::Optimal;
            }
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < t_.rows(); ++i) {
                const double a = t_(i, enter);
                if (a > kPivotTol) {
                    const double ratio = rhs_(i) / a;
                    if (ratio < best - 1e-14 ||
                        (ratio <= best + 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
                        best = std::min(best, ratio);
                        leave = i;
                    }
                }
            }
            if (leave < 0) {
                return Outcome::Unbounded;
            }
            pivot(leave, enter);
        }
        throw NumericalError("lp_maximize: pivot limit reached");
    }

    void pivot(Eigen::Index row, Eigen::Index col) {
        const double p = t_(row, col);
        t_.row(row) /= p;
        rhs_(row) /= p;
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            if (i != row) {
                const double f = t_(i, col);
                if (f != 0.0) {
                    t_.row(i) -= f * t_.row(row);
                    rhs_(i) -= f * rhs_(row);
                    t_(i, col) = 0.0;
                }
            }
        }
        rhs_ = rhs_.cwiseMax(0.0);
        basis_[row] = col;
    }

    void drop_row(Eigen::Index row) {
        const Eigen::Index last = t_.rows() - 1;
        t_.row(row) = t_.row(last);
        rhs_(row) = rhs_(last);
        basis_[row] = basis_[last];
        t_.conservativeResize(last, Eigen::NoChange);
        rhs_.conservativeResize(last);
        basis_.pop_back();
    }

    double objective(const Vector& cost) const {
        double v = 0.0;
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            v += cost(basis_[i]) * rhs_(i);
        }
        return v;
    }

    const Matrix& table() const { return t_; }
    const Vector& rhs() const { return rhs_; }
    const std::vector<Eigen::Index>& basis() const { return basis_; }

private:
    // Bland: lowest-index column with positive reduced cost.
    Eigen::Index entering(const Vector& cost, const std::vector<bool>& allowed) const {
        Vector cb(t_.rows());
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            cb(i) = cost(basis_[i]);
        }
        const Vector reduced = cost - t_.transpose() * cb;
        const double scale = 1.0 + cost.cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < reduced.size(); ++j) {
            if (allowed[static_cast<std::size_t>(j)] && reduced(j) > kCostTol * scale) {
                return j;
            }
        }
        return -1;
    }

    Matrix t_;
    Vector rhs_;
    std::vector<Eigen::Index> basis_;
};

}  // namespace

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal:
            return "optimal";
        case LpStatus::Infeasible:
            return "infeasible";
        case LpStatus::Unbounded:
            return "unbounded";
    }
    return "unknown";
}

LpResult lp_maximize(const LpProblem& p) {
    const Eigen::Index n = p.objective.size();
    const Eigen::Index m = p.constraints.rows();
    if (p.constraints.cols() != n || p.rhs.size() != m) {
        throw DimensionError("lp_maximize: inconsistent problem dimensions");
    }
    require_finite(p.objective, "lp objective");
    require_finite(p.constraints, "lp constraints");
    require_finite(p.rhs, "lp rhs");

    if (m == 0) {
        if (p.objective.isZero(0.0)) {
            return {LpStatus::Optimal, 0.0, Vector::Zero(n)};
        }
        return {LpStatus::Unbounded, 0.0, {}};
    }

    // Columns: x+ (n), x- (n), slack (m), artificial (one per negative rhs row).
    std::vector<Eigen::Index> negative_rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (p.rhs(i) < 0.0) {
            negative_rows.push_back(i);
        }
    }
    const Eigen::Index n_art = static_cast<Eigen::Index>(negative_rows.size());
    const Eigen::Index n_struct = 2 * n + m;
    const Eigen::Index n_cols = n_struct + n_art;

    Matrix a = Matrix::Zero(m, n_cols);
    Vector b = p.rhs;
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    a.leftCols(n) = p.constraints;
    a.middleCols(n, n) = -p.constraints;
    a.middleCols(2 * n, m).setIdentity();
    for (Eigen::Index i = 0; i < m; ++i) {
        basis[static_cast<std::size_t>(i)] = 2 * n + i;
    }
    for (Eigen::Index k = 0; k < n_art; ++k) {
        const Eigen::Index i = negative_rows[static_cast<std::size_t>(k)];
        a.row(i) *= -1.0;
        b(i) *= -1.0;
        a(i, n_struct + k) = 1.0;
        basis[static_cast<std::size_t>(i)] = n_struct + k;
    }
    const Matrix a_orig = a;
    const Vector b_orig = b;

    Tableau tab(std::move(a), std::move(b), std::move(basis));
    std::vector<bool> allowed(static_cast<std::size_t>(n_cols), true);

    if (n_art > 0) {
        Vector phase1 = Vector::Zero(n_cols);
        phase1.tail(n_art).setConstant(-1.0);
        tab.maximize(phase1, allowed);
        const double infeasibility = -tab.objective(phase1);
        if (infeasibility > 1e-9 * (1.0 + p.rhs.cwiseAbs().maxCoeff())) {
            return {LpStatus::Infeasible, 0.0, {}};
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        for (Eigen::Index i = tab.table().rows(); i-- > 0;) {
            if (tab.basis()[static_cast<std::size_t>(i)] < n_struct) {
                continue;
            }
            Eigen::Index col = -1;
            for (Eigen::Index j = 0; j < n_struct; ++j) {
                if (std::abs(tab.table()(i, j)) > 1e-9) {
                    col = j;
                    break;
                }
            }
            if (col >= 0) {
                tab.pivot(i, col);
            } else {
                tab.drop_row(i);
            }
        }
        for (Eigen::Index k = 0; k < n_art; ++k) {
            allowed[static_cast<std::size_t>(n_struct + k)] = false;
        }
    }

    Vector cost = Vector::Zero(n_cols);
    cost.head(n) = p.objective;
    cost.segment(n, n) = -p.objective;
    if (tab.maximize(cost, allowed) == Tableau::Outcome::Unbounded) {
        return {LpStatus::Unbounded, 0.0, {}};
    }

    // Recover the basic solution from the original data for accuracy.
    Vector z = Vector::Zero(n_cols);
    const auto& basis_cols = tab.basis();
    const auto rows = static_cast<Eigen::Index>(basis_cols.size());
    {
        Matrix ab(m, rows);
        for (Eigen::Index k = 0; k < rows; ++k) {
            ab.col(k) = a_orig.col(basis_cols[static_cast<std::size_t>(k)]);
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(ab);
        Vector zb = (qr.rank() == rows) ? Vector(qr.solve(b_orig)) : Vector(tab.rhs());
        if (!zb.allFinite()) {
            zb = tab.rhs();
        }
        for (Eigen::Index k = 0; k < rows; ++k) {
            z(basis_cols[static_cast<std::size_t>(k)]) = zb(k);
        }
    }
    Vector x = z.head(n) - z.segment(n, n);

    auto violation = [&](const Vector& cand) {
        const Vector slack = p.constraints * cand - p.rhs;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double scale = 1.0 + std::abs(p.rhs(i)) +
                                 p.constraints.row(i).cwiseAbs().dot(cand.cwiseAbs());
            worst = std::max(worst, slack(i) / scale);
        }
        return worst;
    };
    if (violation(x) > kCheckTol) {
        const Vector fallback = tab.rhs();
        Vector zt = Vector::Zero(n_cols);
        for (Eigen::Index k = 0; k < rows; ++k) {
            zt(basis_cols[static_cast<std::size_t>(k)]) = fallback(k);
        }
        x = zt.head(n) - zt.segment(n, n);
        if (violation(x) > kCheckTol) {
            throw NumericalError("lp_maximize: optimal witness violates constraints");
        }
    }
    return {LpStatus::Optimal, p.objective.dot(x), std::move(x)};
}

}  // namespace polyreach
