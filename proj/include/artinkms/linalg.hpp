#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace artinkms {

/// Coordinates of a positive trace on C(Z) against the extreme traces, one
/// per point of Z.
using TraceVec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline double mass(const TraceVec& v) { return v.sum(); }

inline bool entrywise_at_least(const TraceVec& v, double floor) {
    return (v.array() >= floor).all();
}

inline bool is_nonneg(const TraceVec& v, double slack = 1e-12) {
    return entrywise_at_least(v, -slack);
}

/// Sum of absolute values of all entries; linear on nonnegative matrices,
/// which is what the level-sum recursions rely on.
inline double entry_norm(const Matrix& m) { return m.cwiseAbs().sum(); }

/// Spectral radius of a nonnegative matrix by power iteration on the shifted
/// matrix M + I (the shift removes peripheral rotation, the radius shifts by
/// exactly one).
inline double spectral_radius(const Matrix& m, double tol = 1e-10, int max_iter = 200000) {
    const int d = static_cast<int>(m.rows());
    if (d == 0) return 0.0;
    if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix not square");
    Matrix shifted = m + Matrix::Identity(d, d);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / d);
    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = shifted * v;
        double nw = w.lpNorm<1>();
        if (nw == 0.0) return 0.0;
        double next = nw / v.lpNorm<1>();
        v = w / nw;
        if (it > 3 && std::abs(next - est) <= tol * std::max(1.0, std::abs(next))) {
            est = next;
            break;
        }
        est = next;
    }
    return est - 1.0;
}

/// Smallest singular value of a square matrix.
inline double smallest_singular_value(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().tail(1)(0);
}

/// Right singular vector for the smallest singular value.
inline Eigen::VectorXd smallest_singular_vector(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    return svd.matrixV().col(m.cols() - 1);
}

/// Solves m x = rhs, refusing ill-conditioned systems.
inline Eigen::VectorXd solve_checked(const Matrix& m, const Eigen::VectorXd& rhs,
                                     double rcond_floor = 1e-12) {
    Eigen::PartialPivLU<Matrix> lu(m);
    double rc = lu.rcond();
    if (!(rc > rcond_floor))
        throw std::domain_error("linalg: system singular or ill-conditioned (rcond="
                                + std::to_string(rc) + ")");
    return lu.solve(rhs);
}

/// Dominant nonnegative eigenvector of a nonnegative matrix, mass one.
inline Eigen::VectorXd perron_vector(const Matrix& m, double tol = 1e-13, int max_iter = 200000) {
    const int d = static_cast<int>(m.rows());
    Matrix shifted = m + Matrix::Identity(d, d);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / d);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = shifted * v;
        double nw = w.sum();
        if (nw <= 0.0) break;
        w /= nw;
        double delta = (w - v).cwiseAbs().maxCoeff();
        v = w;
        if (delta <= tol) break;
    }
    return v;
}

}  // namespace artinkms
