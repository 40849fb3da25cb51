#pragma once

// Curvature of a left-invariant almost-hermitian structure.
//
//   p(X,Y) = -1/2 tr(J ad_{mu(X,Y)}) + 1/2 tr(ad_{J mu(X,Y)})   (Chern-Ricci form)
//   p(X,Y) = omega(PX, Y), i.e. p = Omega P                     (Chern-Ricci operator)
//   Ric    = M - 1/2 B - S(ad_H)   in a g-orthonormal basis, where
//            <M X,Y> = -1/2 sum_{ij} <mu(X,e_i),e_j><mu(Y,e_i),e_j>
//                      +1/4 sum_{ij} <mu(e_i,e_j),X><mu(e_i,e_j),Y>,
//            <B X,Y> = tr(ad_X ad_Y),  <H,X> = tr ad_X.
//
// The flow right-hand side is  d/dt omega = -2p,
// d/dt g = -2 p^c(., J.) - 2 ric^{ac} as bilinear forms.

#include "bracket.hpp"

#include <optional>

namespace scf {

/// Curvature data of one almost-hermitian structure (mu, omega, g).
struct CurvatureReport {
    Matrix p;                 ///< Chern-Ricci form, entry (i,j) = p(e_i,e_j)
    Matrix P;                 ///< Chern-Ricci operator, p = omega(P.,.)
    std::optional<Vector> z;  ///< Z with p(X,Y) = omega(Z, mu(X,Y)), when consistent
    Matrix ric;               ///< Ricci operator of g
    Matrix ric_ac;            ///< anti-J-invariant part (ric + J ric J)/2
    double chern_scalar = 0;  ///< tr P
    double scalar = 0;        ///< R = tr Ric
};

namespace detail {

inline void require_lie(const BracketTensor& mu, const char* where) {
    const double j = jacobi_residual(mu);
    if (j > settings().flow_residual_tol)
        throw ValidationError(std::string(where) + ": Jacobi residual " + std::to_string(j));
}

inline void require_closed(const BracketTensor& mu, const CompatibleTriple& t,
                           const char* where) {
    const double c = closedness_residual(mu, t.omega);
    if (c > settings().flow_residual_tol)
        throw ValidationError(std::string(where) + ": closedness residual " + std::to_string(c));
}

/// Ricci operator in a basis that is orthonormal for the metric.
inline Matrix ricci_orthonormal(const BracketTensor& mu) {
    const auto n = mu.dim();
    Matrix m(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b) {
            double t1 = 0.0, t2 = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    t1 += mu(a, i, j) * mu(b, i, j);
                    t2 += mu(i, j, a) * mu(i, j, b);
                }
            m(a, b) = m(b, a) = -0.5 * t1 + 0.25 * t2;
        }
    Matrix killing(n, n);
    std::vector<Matrix> ads;
    ads.reserve(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ads.push_back(mu.ad_basis(i));
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b)
            killing(a, b) = killing(b, a) = (ads[static_cast<size_t>(a)] *
                                             ads[static_cast<size_t>(b)]).trace();
    Vector h(n);
    for (Eigen::Index a = 0; a < n; ++a) h[a] = ads[static_cast<size_t>(a)].trace();
    const Matrix ad_h = mu.ad(h);
    return m - 0.5 * killing - 0.5 * (ad_h + ad_h.transpose());
}

}  // namespace detail

/// Chern-Ricci form and operator; z is filled when the least-squares solve of
/// p(X,Y) = omega(Z, mu(X,Y)) is consistent, and left empty otherwise.
inline CurvatureReport chern_ricci(const BracketTensor& mu, const CompatibleTriple& t) {
    detail::require_lie(mu, "chern_ricci");
    detail::require_closed(mu, t, "chern_ricci");
    const auto n = mu.dim();

    Vector tr_jad(n), tr_ad(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Matrix a = mu.ad_basis(i);
        tr_jad[i] = (t.j * a).trace();
        tr_ad[i] = a.trace();
    }
    CurvatureReport r;
    r.p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Vector w = mu.pair(i, j);
            const double v = -0.5 * w.dot(tr_jad) + 0.5 * (t.j * w).dot(tr_ad);
            r.p(i, j) = v;
            r.p(j, i) = -v;
        }
    r.P = t.omega.fullPivLu().solve(r.p);
    r.chern_scalar = r.P.trace();

    const Eigen::Index rows = n * (n - 1) / 2;
    Matrix lhs(rows, n);
    Vector rhs(rows);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j, ++row) {
            lhs.row(row) = (t.omega * mu.pair(i, j)).transpose();
            rhs[row] = r.p(i, j);
        }
    const Vector z = lhs.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
    if ((lhs * z - rhs).norm() <= 1e-8 * (1.0 + rhs.norm())) r.z = z;
    return r;
}

/// Ricci operator, its anti-J-invariant part and the scalar curvature. A
/// non-identity metric is handled by Cholesky orthonormalization.
inline CurvatureReport ricci(const BracketTensor& mu, const CompatibleTriple& t) {
    detail::require_lie(mu, "ricci");
    const auto n = mu.dim();
    CurvatureReport r;
    if ((t.metric - Matrix::Identity(n, n)).norm() < settings().structure_tol) {
        r.ric = detail::ricci_orthonormal(mu);
    } else {
        Eigen::LLT<Matrix> llt(t.metric);
        const Matrix l = llt.matrixL();
        const Matrix q = l.transpose().inverse();
        const Matrix ric2 = detail::ricci_orthonormal(pushforward(mu, l.transpose()));
        r.ric = q * ric2 * l.transpose();
    }
    const Matrix form = t.metric * r.ric;
    if ((form - form.transpose()).norm() > 1e-8 * (1.0 + form.norm()))
        throw std::logic_error("ricci: operator is not g-self-adjoint");
    r.ric_ac = 0.5 * (r.ric + t.j * r.ric * t.j);
    r.scalar = r.ric.trace();
    return r;
}

/// Full curvature report for one structure.
inline CurvatureReport curvature(const BracketTensor& mu, const CompatibleTriple& t) {
    CurvatureReport r = chern_ricci(mu, t);
    const CurvatureReport ric = ricci(mu, t);
    r.ric = ric.ric;
    r.ric_ac = ric.ric_ac;
    r.scalar = ric.scalar;
    return r;
}

struct ScfRhs {
    Matrix omega_dot;
    Matrix metric_dot;
};

/// Right-hand side of the direct flow on (omega, g) for a fixed bracket.
inline ScfRhs scf_rhs(const CompatibleTriple& state, const BracketTensor& mu) {
    const CurvatureReport r = curvature(mu, state);
    const Matrix pc = j_split_form(r.p, state.j).c;
    ScfRhs out;
    out.omega_dot = -2.0 * r.p;
    out.metric_dot = -2.0 * (pc * state.j) - 2.0 * (state.metric * r.ric_ac);
    return out;
}

/// Worst entry of N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y] over basis
/// pairs; zero exactly when J is integrable.
inline double nijenhuis_residual(const BracketTensor& mu, const CompatibleTriple& t) {
    const auto n = mu.dim();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Vector ji = t.j.col(i), jj = t.j.col(j);
            const Vector nv = mu.apply(ji, jj) - t.j * mu.apply(ji, Vector::Unit(n, j)) -
                              t.j * mu.apply(Vector::Unit(n, i), jj) - mu.pair(i, j);
            worst = std::max(worst, nv.cwiseAbs().maxCoeff());
        }
    return worst;
}

}  // namespace scf
