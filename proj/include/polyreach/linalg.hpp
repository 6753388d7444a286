#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polyreach {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative tolerance for deciding which singular values count as zero.
inline constexpr double kDefaultRankTol = 1e-9;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent shapes between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Full singular value decomposition W = U diag(sigma) V^T.
///
/// U is rows x rows and V is cols x cols, so the trailing columns span the
/// left null space and the null space of W respectively. Each column of V
/// (and its paired column of U) is signed so that its first nonzero entry is
/// non-negative; trailing columns of U are signed by their own first entry.
struct SvdResult {
    Matrix U;
    Vector singular_values;
    Matrix V;
};

void require_finite(const Matrix& m, const std::string& what);
void require_finite(const Vector& v, const std::string& what);

SvdResult svd(const Matrix& w);

/// Count of singular values above rank_tol * sigma_1. Input must be sorted
/// non-increasing.
std::size_t numerical_rank(const Vector& singular_values, double rank_tol = kDefaultRankTol);

/// Moore-Penrose pseudoinverse. Singular values at or below rank_tol * sigma_1
/// are treated as zero; the zero matrix maps to the zero matrix of transposed
/// shape.
Matrix pinv(const Matrix& w, double rank_tol = kDefaultRankTol);

/// Signed cosine of the angle between two nonzero vectors.
double cosine_similarity(const Vector& a, const Vector& b);

}  // namespace polyreach
