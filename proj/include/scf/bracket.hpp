#pragma once

// Lie bracket tensors, residuals and the tuple shorthand used for
// low-dimensional structure constants.
//
// Storage: c(i,j,k) is the e_k coordinate of mu(e_i, e_j), antisymmetric in (i,j).
// Norm convention: |mu|^2 = sum_{i<j} |mu(e_i,e_j)|^2, each unordered pair once.

#include "linalg.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace scf {

class BracketTensor {
public:
    BracketTensor() : n_(0) {}
    explicit BracketTensor(Eigen::Index dim)
        : n_(dim), c_(Eigen::VectorXd::Zero(dim * dim * dim)) {}

    Eigen::Index dim() const { return n_; }

    double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
        return c_[idx(i, j, k)];
    }
    double& at(Eigen::Index i, Eigen::Index j, Eigen::Index k) { return c_[idx(i, j, k)]; }

    /// Adds v to c(i,j,k) and -v to c(j,i,k), keeping the tensor antisymmetric.
    void add(Eigen::Index i, Eigen::Index j, Eigen::Index k, double v) {
        c_[idx(i, j, k)] += v;
        c_[idx(j, i, k)] -= v;
    }

    /// mu(e_i, e_j) as a coordinate vector.
    Vector pair(Eigen::Index i, Eigen::Index j) const {
        Vector v(n_);
        for (Eigen::Index k = 0; k < n_; ++k) v[k] = c_[idx(i, j, k)];
        return v;
    }

    /// mu(x, y).
    Vector apply(const Vector& x, const Vector& y) const {
        Vector out = Vector::Zero(n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            if (x[i] == 0.0) continue;
            for (Eigen::Index j = 0; j < n_; ++j) {
                if (y[j] == 0.0) continue;
                const double w = x[i] * y[j];
                for (Eigen::Index k = 0; k < n_; ++k) out[k] += w * c_[idx(i, j, k)];
            }
        }
        return out;
    }

    /// ad_x = mu(x, .) as an operator, (ad_x)_{kj} = sum_i x_i c(i,j,k).
    Matrix ad(const Vector& x) const {
        Matrix m = Matrix::Zero(n_, n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            if (x[i] == 0.0) continue;
            for (Eigen::Index j = 0; j < n_; ++j)
                for (Eigen::Index k = 0; k < n_; ++k) m(k, j) += x[i] * c_[idx(i, j, k)];
        }
        return m;
    }

    Matrix ad_basis(Eigen::Index i) const {
        Matrix m(n_, n_);
        for (Eigen::Index j = 0; j < n_; ++j)
            for (Eigen::Index k = 0; k < n_; ++k) m(k, j) = c_[idx(i, j, k)];
        return m;
    }

    const Eigen::VectorXd& data() const { return c_; }
    Eigen::VectorXd& data() { return c_; }

    static BracketTensor from_data(Eigen::Index dim, const Eigen::VectorXd& flat) {
        BracketTensor b(dim);
        b.c_ = flat;
        return b;
    }

    BracketTensor& operator+=(const BracketTensor& o) { c_ += o.c_; return *this; }
    BracketTensor& operator*=(double s) { c_ *= s; return *this; }
    friend BracketTensor operator+(BracketTensor a, const BracketTensor& b) { return a += b; }
    friend BracketTensor operator*(double s, BracketTensor a) { return a *= s; }

private:
    Eigen::Index idx(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
        return (i * n_ + j) * n_ + k;
    }
    Eigen::Index n_;
    Eigen::VectorXd c_;
};

/// |mu| with each unordered basis pair counted once.
inline double bracket_norm(const BracketTensor& mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < mu.dim(); ++i)
        for (Eigen::Index j = i + 1; j < mu.dim(); ++j)
            s += mu.pair(i, j).squaredNorm();
    return std::sqrt(s);
}

/// Worst-case Jacobi defect max_{i,j,k} |mu(mu(e_i,e_j),e_k) + cyclic|_inf.
inline double jacobi_residual(const BracketTensor& mu) {
    const auto n = mu.dim();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            for (Eigen::Index k = j + 1; k < n; ++k) {
                Vector v = mu.ad(mu.pair(i, j)).col(k)
                         + mu.ad(mu.pair(j, k)).col(i)
                         + mu.ad(mu.pair(k, i)).col(j);
                worst = std::max(worst, v.cwiseAbs().maxCoeff());
            }
    return worst;
}

/// delta_mu(E)(x,y) = mu(Ex,y) + mu(x,Ey) - E mu(x,y). Equals mu when E = I.
inline BracketTensor delta(const BracketTensor& mu, const Matrix& e) {
    const auto n = mu.dim();
    BracketTensor d(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k) {
                double s = 0.0;
                for (Eigen::Index l = 0; l < n; ++l)
                    s += e(l, i) * mu(l, j, k) + e(l, j) * mu(i, l, k) - e(k, l) * mu(i, j, l);
                d.at(i, j, k) = s;
            }
    return d;
}

/// |delta_mu(d)| in the bracket norm; zero exactly when d is a derivation.
inline double derivation_residual(const BracketTensor& mu, const Matrix& d) {
    return bracket_norm(delta(mu, d));
}

/// Worst-case defect of  q(mu(X,Y),Z) + q(mu(Y,Z),X) + q(mu(Z,X),Y) = 0
/// over basis triples (closedness of the 2-form q for mu).
inline double closedness_residual(const BracketTensor& mu, const Matrix& q) {
    const auto n = mu.dim();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            for (Eigen::Index k = j + 1; k < n; ++k) {
                const double v = mu.pair(i, j).dot(q.col(k))
                               + mu.pair(j, k).dot(q.col(i))
                               + mu.pair(k, i).dot(q.col(j));
                worst = std::max(worst, std::abs(v));
            }
    return worst;
}

inline double closedness_residual(const BracketTensor& mu, const CompatibleTriple& t) {
    return closedness_residual(mu, t.omega);
}

/// (h . mu)(x, y) = h mu(h^{-1} x, h^{-1} y), the change-of-basis action.
inline BracketTensor pushforward(const BracketTensor& mu, const Matrix& h) {
    const auto n = mu.dim();
    const Matrix hi = h.fullPivLu().inverse();
    BracketTensor out(n);
    // out(i,j,k) = sum_{a,b,c} hi(a,i) hi(b,j) h(k,c) mu(a,b,c)
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            const Vector w = h * mu.pair(a, b);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (hi(a, i) == 0.0) continue;
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double f = hi(a, i) * hi(b, j);
                    if (f == 0.0) continue;
                    for (Eigen::Index k = 0; k < n; ++k) out.at(i, j, k) += f * w[k];
                }
            }
        }
    return out;
}

struct StructuralFlags {
    bool unimodular = false;
    bool nilpotent = false;
    bool solvable = false;
};

namespace detail {

/// Orthonormal basis of the span of the columns of m; columns below the
/// series-zero threshold are discarded.
inline Matrix column_space(const Matrix& m) {
    if (m.cols() == 0) return Matrix(m.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > settings().series_zero) ++rank;
    return svd.matrixU().leftCols(rank);
}

/// Span of { mu(x, y) : x in A-columns, y in B-columns }.
inline Matrix bracket_span(const BracketTensor& mu, const Matrix& a, const Matrix& b) {
    std::vector<Vector> gens;
    for (Eigen::Index p = 0; p < a.cols(); ++p)
        for (Eigen::Index q = 0; q < b.cols(); ++q)
            gens.push_back(mu.apply(a.col(p), b.col(q)));
    Matrix m(mu.dim(), static_cast<Eigen::Index>(gens.size()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) = gens[static_cast<size_t>(c)];
    return column_space(m);
}

}  // namespace detail

/// Unimodularity (tr ad_X = 0 for all X), nilpotency (lower central series
/// vanishes) and solvability (derived series vanishes), decided numerically
/// with the series-zero threshold.
inline StructuralFlags structural_flags(const BracketTensor& mu) {
    const auto n = mu.dim();
    StructuralFlags f;
    double h = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) h = std::max(h, std::abs(mu.ad_basis(i).trace()));
    f.unimodular = h < settings().series_zero;

    const Matrix full = Matrix::Identity(n, n);
    Matrix lower = full;
    f.nilpotent = false;
    for (Eigen::Index step = 0; step <= n + 1; ++step) {
        lower = detail::bracket_span(mu, lower, full);
        if (lower.cols() == 0) { f.nilpotent = true; break; }
    }
    Matrix derived = full;
    f.solvable = false;
    for (Eigen::Index step = 0; step <= n + 1; ++step) {
        derived = detail::bracket_span(mu, derived, derived);
        if (derived.cols() == 0) { f.solvable = true; break; }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Tuple shorthand. "(slot_1, ..., slot_n)" where slot i is a signed sum of
// terms [coeff*]jk, one digit per index, meaning c(j,k,i) += coeff. A slot of
// "0" contributes nothing. Coefficients are decimal literals or rationals
// "p/q"; a missing coefficient means 1. Whitespace is ignored everywhere.
// Example (dim 4): "(1/2*41+42, 1/2*42, 12+43, 0)" encodes
//   [e4,e1] = 1/2 e1,  [e4,e2] = e1 + 1/2 e2,  [e4,e3] = e3,  [e1,e2] = e3.
// ---------------------------------------------------------------------------

struct ParseError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline ParseError parse_error(const std::string& text, size_t pos, const std::string& what) {
    return ParseError("shorthand parse error at position " + std::to_string(pos) + ": " +
                      what + " in \"" + text + "\"");
}

}  // namespace detail

inline BracketTensor parse_shorthand(const std::string& text, Eigen::Index dim) {
    if (dim < 1 || dim > 9)
        throw ParseError("shorthand supports dimensions 1..9, got " + std::to_string(dim));
    std::string s;
    std::vector<size_t> src;  // original position of each kept character
    for (size_t i = 0; i < text.size(); ++i)
        if (!std::isspace(static_cast<unsigned char>(text[i]))) {
            s.push_back(text[i]);
            src.push_back(i);
        }
    if (s.empty() || s.front() != '(' || s.back() != ')')
        throw detail::parse_error(text, 0, "expected parenthesized tuple");

    BracketTensor mu(dim);
    Eigen::Index slot = 0;
    size_t p = 1;
    const size_t end = s.size() - 1;
    while (true) {
        if (slot >= dim) throw detail::parse_error(text, src[p - 1], "too many slots");
        size_t q = p;
        int depth = 0;
        while (q < end && !(s[q] == ',' && depth == 0)) ++q;
        const std::string term_text = s.substr(p, q - p);
        // parse one slot: signed sum of terms
        size_t tp = 0;
        if (term_text.empty())
            throw detail::parse_error(text, src[p > 0 ? p - 1 : 0], "empty slot");
        if (term_text != "0") {
            while (tp < term_text.size()) {
                double sign = 1.0;
                if (term_text[tp] == '+' || term_text[tp] == '-') {
                    if (term_text[tp] == '-') sign = -1.0;
                    ++tp;
                }
                // find the term end: next top-level '+'/'-' not part of an exponent
                size_t te = tp;
                while (te < term_text.size()) {
                    const char ch = term_text[te];
                    if ((ch == '+' || ch == '-') && te > tp) {
                        const char prev = term_text[te - 1];
                        if (prev != 'e' && prev != 'E') break;
                    }
                    ++te;
                }
                std::string term = term_text.substr(tp, te - tp);
                if (term.size() < 2)
                    throw detail::parse_error(text, src[p + tp], "term too short");
                double coeff = 1.0;
                std::string jk = term;
                const size_t star = term.rfind('*');
                if (star != std::string::npos) {
                    const std::string cs = term.substr(0, star);
                    jk = term.substr(star + 1);
                    const size_t slash = cs.find('/');
                    char* ep = nullptr;
                    if (slash != std::string::npos) {
                        const std::string ps = cs.substr(0, slash), qs = cs.substr(slash + 1);
                        const double pv = std::strtod(ps.c_str(), &ep);
                        if (ep != ps.c_str() + ps.size())
                            throw detail::parse_error(text, src[p + tp], "bad numerator");
                        const double qv = std::strtod(qs.c_str(), &ep);
                        if (ep != qs.c_str() + qs.size() || qv == 0.0)
                            throw detail::parse_error(text, src[p + tp], "bad denominator");
                        coeff = pv / qv;
                    } else {
                        coeff = std::strtod(cs.c_str(), &ep);
                        if (ep != cs.c_str() + cs.size())
                            throw detail::parse_error(text, src[p + tp], "bad coefficient");
                    }
                }
                if (jk.size() != 2 || !std::isdigit(static_cast<unsigned char>(jk[0])) ||
                    !std::isdigit(static_cast<unsigned char>(jk[1])))
                    throw detail::parse_error(text, src[p + tp],
                                              "expected two index digits, got \"" + jk + "\"");
                const int j = jk[0] - '0', k = jk[1] - '0';
                if (j < 1 || j > dim || k < 1 || k > dim)
                    throw detail::parse_error(text, src[p + tp], "index out of range");
                mu.add(j - 1, k - 1, slot, sign * coeff);
                tp = te;
            }
        }
        ++slot;
        if (q >= end) break;
        p = q + 1;
    }
    if (slot != dim)
        throw detail::parse_error(text, text.size() - 1,
                                  "expected " + std::to_string(dim) + " slots, got " +
                                  std::to_string(slot));
    return mu;
}

namespace detail {

/// Shortest decimal literal that parses back to exactly x.
inline std::string shortest_double(double x) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Coefficient in canonical form: integers plain, small rationals as "p/q",
/// anything else as the shortest round-tripping decimal.
inline std::string format_coeff(double c) {
    if (c == std::floor(c) && std::abs(c) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", c);
        return buf;
    }
    for (int q = 2; q <= 64; ++q) {
        const double p = c * q;
        if (p == std::floor(p) && std::abs(p) < 1e15 &&
            static_cast<double>(p) / static_cast<double>(q) == c) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.0f/%d", p, q);
            return buf;
        }
    }
    return shortest_double(c);
}

}  // namespace detail

/// Canonical shorthand for a bracket tensor. Each slot lists its unordered
/// pairs in lexicographic order, each oriented so the coefficient is positive;
/// parse_shorthand(serialize_shorthand(mu), dim) reproduces mu exactly.
inline std::string serialize_shorthand(const BracketTensor& mu) {
    const auto n = mu.dim();
    if (n < 1 || n > 9)
        throw ValidationError("shorthand supports dimensions 1..9");
    std::string out = "(";
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i) out += ",";
        std::string slot;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = j + 1; k < n; ++k) {
                const double c = mu(j, k, i);
                if (c == 0.0) continue;
                Eigen::Index a = j, b = k;
                double v = c;
                if (v < 0.0) { std::swap(a, b); v = -v; }
                if (!slot.empty()) slot += "+";
                if (v != 1.0) slot += detail::format_coeff(v) + "*";
                slot += static_cast<char>('1' + a);
                slot += static_cast<char>('1' + b);
            }
        out += slot.empty() ? "0" : slot;
    }
    out += ")";
    return out;
}

/// omega = sum of c e^i wedge e^j terms, 1-based indices.
inline Matrix two_form(Eigen::Index dim, const std::vector<std::array<double, 3>>& terms) {
    Matrix om = Matrix::Zero(dim, dim);
    for (const auto& t : terms) {
        const auto i = static_cast<Eigen::Index>(t[0]) - 1;
        const auto j = static_cast<Eigen::Index>(t[1]) - 1;
        om(i, j) += t[2];
        om(j, i) -= t[2];
    }
    return om;
}

}  // namespace scf
