#include "polyreach/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace polyreach {

namespace {

// Index of the first entry whose magnitude is not negligible relative to the
// column norm, or -1 for a zero column.
Eigen::Index first_significant(const Eigen::Ref<const Vector>& col) {
    const double scale = col.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return -1;
    }
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        if (std::abs(col(i)) > 1e-12 * scale) {
            return i;
        }
    }
    return -1;
}

}  // namespace

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) {
        throw NumericalError(what + ": non-finite entry");
    }
}

void require_finite(const Vector& v, const std::string& what) {
    if (!v.allFinite()) {
        throw NumericalError(what + ": non-finite entry");
    }
}

SvdResult svd(const Matrix& w) {
    if (w.rows() < 1 || w.cols() < 1) {
        throw DimensionError("svd: empty matrix");
    }
    require_finite(w, "svd");

    Eigen::JacobiSVD<Matrix> solver(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("svd: Jacobi iteration did not converge");
    }

    SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
    if (!out.U.allFinite() || !out.V.allFinite() || !out.singular_values.allFinite()) {
        throw NumericalError("svd: non-finite factors");
    }

    const Eigen::Index paired = out.singular_values.size();
    for (Eigen::Index j = 0; j < out.V.cols(); ++j) {
        const Eigen::Index i = first_significant(out.V.col(j));
        if (i >= 0 && out.V(i, j) < 0.0) {
            out.V.col(j) *= -1.0;
            if (j < paired) {
                out.U.col(j) *= -1.0;
            }
        }
    }
    for (Eigen::Index j = paired; j < out.U.cols(); ++j) {
        const Eigen::Index i = first_significant(out.U.col(j));
        if (i >= 0 && out.U(i, j) < 0.0) {
            out.U.col(j) *= -1.0;
        }
    }
    return out;
}

std::size_t numerical_rank(const Vector& singular_values, double rank_tol) {
    if (singular_values.size() == 0 || singular_values(0) <= 0.0) {
        return 0;
    }
    const double cutoff = rank_tol * singular_values(0);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values(i) > cutoff) {
            ++rank;
        }
    }
    return rank;
}

Matrix pinv(const Matrix& w, double rank_tol) {
    if (w.rows() == 0 || w.cols() == 0) {
        return Matrix::Zero(w.cols(), w.rows());
    }
    const SvdResult f = svd(w);
    const auto rank = static_cast<Eigen::Index>(numerical_rank(f.singular_values, rank_tol));
    Matrix out = Matrix::Zero(w.cols(), w.rows());
    for (Eigen::Index i = 0; i < rank; ++i) {
        out.noalias() += (f.V.col(i) / f.singular_values(i)) * f.U.col(i).transpose();
    }
    return out;
}

double cosine_similarity(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine_similarity: length mismatch");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        throw NumericalError("cosine_similarity: zero vector");
    }
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace polyreach
