#pragma once

// Shared fixtures for the test binaries.

#include "polyreach/network.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace polyreach::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = n(rng);
        }
    }
    return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
    return random_matrix(n, 1, rng, scale).col(0);
}

inline Vector sample_box(const Box& box, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector x(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        x(i) = box.lower()(i) + u(rng) * (box.upper()(i) - box.lower()(i));
    }
    return x;
}

inline Box unit_box(Eigen::Index n) { return Box(Vector::Zero(n), Vector::Ones(n)); }

inline SequentialReluNetwork net_with_widths(std::vector<Eigen::Index> widths, std::uint64_t seed,
                                             double bias_scale = 0.1) {
    return random_network(widths, seed, bias_scale);
}

inline Matrix double_integrator_A() {
    Matrix A(2, 2);
    A << 1.0, 1.0, 0.0, 1.0;
    return A;
}

inline Matrix double_integrator_B() {
    Matrix B(2, 1);
    B << 0.5, 1.0;
    return B;
}

inline Box double_integrator_x0() {
    return Box((Vector(2) << 2.5, -0.25).finished(), (Vector(2) << 3.0, 0.25).finished());
}

inline ControlledSystem double_integrator(SequentialReluNetwork controller) {
    return ControlledSystem{double_integrator_A(), double_integrator_B(), Vector::Zero(2),
                            std::move(controller), double_integrator_x0(), std::nullopt,
                            std::nullopt};
}

// Vertices of {y in R^2 : D y <= d} by intersecting every pair of facet
// lines and keeping the feasible points.
inline std::vector<Vector> polytope_vertices_2d(const Matrix& D, const Vector& d,
                                                double tol = 1e-9) {
    std::vector<Vector> out;
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < D.rows(); ++j) {
            Matrix M(2, 2);
            M << D.row(i), D.row(j);
            if (std::abs(M.determinant()) < 1e-12 * M.norm() * M.norm()) {
                continue;
            }
            const Vector v = M.partialPivLu().solve((Vector(2) << d(i), d(j)).finished());
            const double scale = 1.0 + v.cwiseAbs().maxCoeff();
            if (((D * v - d).array() <= tol * scale).all()) {
                out.push_back(v);
            }
        }
    }
    return out;
}

inline constexpr double kGravity = 9.81;
inline constexpr double kQuadDt = 0.1;

// Discretized quadrotor: A = I + dt [[0, I], [0, 0]], B = dt [0; diag(g, -g, 1)],
// e = dt (0, 0, 0, 0, 0, -g).
inline ControlledSystem quadrotor(SequentialReluNetwork controller) {
    Matrix A = Matrix::Identity(6, 6);
    A.topRightCorner(3, 3) += kQuadDt * Matrix::Identity(3, 3);
    Matrix B = Matrix::Zero(6, 3);
    B(3, 0) = kQuadDt * kGravity;
    B(4, 1) = -kQuadDt * kGravity;
    B(5, 2) = kQuadDt;
    Vector e = Vector::Zero(6);
    e(5) = -kQuadDt * kGravity;
    Box x0((Vector(6) << 4.69, 4.65, 2.975, 0.9499, -0.0001, -0.0001).finished(),
           (Vector(6) << 4.71, 4.75, 3.025, 0.9501, 0.0001, 0.0001).finished());
    return ControlledSystem{A, B, e, std::move(controller), x0, std::nullopt, std::nullopt};
}

}  // namespace polyreach::testing
