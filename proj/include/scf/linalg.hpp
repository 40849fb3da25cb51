#pragma once

// Linear-algebra layer for almost-Kahler structures on a fixed vector space.
//
// Conventions used throughout the library:
//   omega(X,Y) = X^T Omega Y          (Omega antisymmetric, nondegenerate)
//   g(X,Y)     = X^T G Y              (G symmetric positive definite)
//   J          = -G^{-1} Omega        (compatible iff J^2 = -I)
//   A^{t_g}    = G^{-1} A^T G         (g-adjoint of an operator)
//   A^{t_w}    = -J A^{t_g} J         (omega-adjoint)
//   A^c  = (A - J A J)/2,  A^{ac} = (A + J A J)/2     (operators)
//   q^c  = (q + J^T q J)/2, q^{ac} = (q - J^T q J)/2  (bilinear forms)

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace scf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Global numeric thresholds. All norms are Frobenius unless stated otherwise.
struct Settings {
    double structure_tol = 1e-10;     ///< acceptance bound for J^2 = -I, Jacobi, closedness
    double series_zero = 1e-9;        ///< a central/derived series term counts as zero below this
    double derivation_svd_rel = 1e-10;///< relative singular value cutoff for Der(mu) kernels
    double flow_residual_tol = 1e-6;  ///< Jacobi/closedness drift accepted along flows
};

inline Settings& settings() {
    static Settings s;
    return s;
}

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A symplectic form, a compatible metric and the induced almost complex structure.
struct CompatibleTriple {
    Matrix omega;
    Matrix metric;
    Matrix j;

    Eigen::Index dim() const { return omega.rows(); }
};

/// Validates (omega, metric) and assembles J = -metric^{-1} omega.
/// Throws ValidationError on a degenerate omega, a non-positive metric, or
/// when |J^2 + I| exceeds the structure tolerance (incompatible pair).
inline CompatibleTriple build_triple(const Matrix& omega, const Matrix& metric) {
    const auto n = omega.rows();
    if (omega.cols() != n || metric.rows() != n || metric.cols() != n)
        throw ValidationError("build_triple: omega and metric must be square of equal size");
    if ((omega + omega.transpose()).norm() > settings().structure_tol)
        throw ValidationError("build_triple: omega is not antisymmetric");
    if ((metric - metric.transpose()).norm() > settings().structure_tol)
        throw ValidationError("build_triple: metric is not symmetric");

    Eigen::LLT<Matrix> llt(metric);
    if (llt.info() != Eigen::Success)
        throw ValidationError("build_triple: metric is not positive definite");

    Eigen::FullPivLU<Matrix> lu(omega);
    if (!lu.isInvertible())
        throw ValidationError("build_triple: omega is degenerate");

    CompatibleTriple t;
    t.omega = omega;
    t.metric = metric;
    t.j = -llt.solve(omega);
    const double defect = (t.j * t.j + Matrix::Identity(n, n)).norm();
    if (defect > settings().structure_tol)
        throw ValidationError("build_triple: pair is not compatible, |J^2 + I| = " +
                              std::to_string(defect));
    return t;
}

/// g-adjoint  A^{t_g} = G^{-1} A^T G.
inline Matrix g_transpose(const Matrix& a, const CompatibleTriple& t) {
    return t.metric.ldlt().solve(a.transpose() * t.metric);
}

/// omega-adjoint  A^{t_w} = -J A^{t_g} J. An involution: applying it twice returns A.
inline Matrix omega_transpose(const Matrix& a, const CompatibleTriple& t) {
    return -t.j * g_transpose(a, t) * t.j;
}

struct Split {
    Matrix c;   ///< part commuting with J
    Matrix ac;  ///< part anticommuting with J
};

/// Splits an operator into its J-invariant and J-anti-invariant parts,
/// A = A^c + A^{ac} with A^c J = J A^c and A^{ac} J = -J A^{ac}.
inline Split j_split(const Matrix& a, const Matrix& j) {
    Split s;
    s.c = 0.5 * (a - j * a * j);
    s.ac = 0.5 * (a + j * a * j);
    return s;
}

/// Splits a bilinear form q into q^c = (q + q(J.,J.))/2 and q^{ac} = (q - q(J.,J.))/2.
inline Split j_split_form(const Matrix& q, const Matrix& j) {
    Split s;
    s.c = 0.5 * (q + j.transpose() * q * j);
    s.ac = 0.5 * (q - j.transpose() * q * j);
    return s;
}

}  // namespace scf
