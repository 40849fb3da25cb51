#include <catch2/catch_amalgamated.hpp>

#include <scf/bracket.hpp>
#include <scf/linalg.hpp>

#include <random>

using namespace scf;

namespace {

Matrix random_matrix(Eigen::Index n, std::mt19937& rng) {
    std::normal_distribution<double> dist;
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = dist(rng);
    return m;
}

/// Random compatible pair: any nondegenerate antisymmetric omega together with
/// the metric from its polar decomposition, G = sqrt(omega^T omega), J = -omega G^{-1}.
CompatibleTriple random_triple(Eigen::Index n, std::mt19937& rng) {
    Matrix b = random_matrix(n, rng);
    Matrix om0 = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n / 2; ++i) {
        om0(i, n / 2 + i) = 1.0;
        om0(n / 2 + i, i) = -1.0;
    }
    Matrix om = b.transpose() * om0 * b;
    Eigen::SelfAdjointEigenSolver<Matrix> es(om.transpose() * om);
    Matrix g = es.operatorSqrt();
    return build_triple(om, g);
}

}  // namespace

TEST_CASE("build_triple on the standard pair") {
    Matrix om = two_form(4, {{1, 4, 1.0}, {2, 3, 1.0}});
    auto t = build_triple(om, Matrix::Identity(4, 4));
    Vector e1 = Vector::Unit(4, 0), e2 = Vector::Unit(4, 1), e3 = Vector::Unit(4, 2),
           e4 = Vector::Unit(4, 3);
    CHECK((t.j * e1 - e4).norm() == 0.0);
    CHECK((t.j * e2 - e3).norm() == 0.0);
    CHECK((t.j * e3 + e2).norm() == 0.0);
    CHECK((t.j * e4 + e1).norm() == 0.0);
    CHECK((t.j * t.j + Matrix::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("build_triple validation") {
    Matrix id = Matrix::Identity(4, 4);
    SECTION("degenerate omega") {
        CHECK_THROWS_AS(build_triple(Matrix::Zero(4, 4), id), ValidationError);
    }
    SECTION("non-antisymmetric omega") {
        CHECK_THROWS_AS(build_triple(id, id), ValidationError);
    }
    SECTION("non-positive metric") {
        Matrix om = two_form(4, {{1, 2, 1.0}, {3, 4, 1.0}});
        CHECK_THROWS_AS(build_triple(om, -id), ValidationError);
    }
    SECTION("incompatible pair") {
        Matrix om = two_form(4, {{1, 2, 1.0}, {3, 4, 2.0}});
        CHECK_THROWS_AS(build_triple(om, id), ValidationError);
    }
}

TEST_CASE("adjoints and the omega-transpose involution") {
    std::mt19937 rng(12345);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index n = (rep % 2) ? 4 : 6;
        auto t = random_triple(n, rng);
        Matrix a = random_matrix(n, rng);

        Matrix atg = g_transpose(a, t);
        Matrix atw = omega_transpose(a, t);
        std::normal_distribution<double> dist;
        Vector x(n), y(n);
        for (Eigen::Index i = 0; i < n; ++i) { x[i] = dist(rng); y[i] = dist(rng); }

        // g(Ax, y) = g(x, A^{t_g} y) and omega(Ax, y) = omega(x, A^{t_w} y)
        CHECK(std::abs((a * x).dot(t.metric * y) - x.dot(t.metric * (atg * y))) < 1e-9);
        CHECK(std::abs((a * x).dot(t.omega * y) - x.dot(t.omega * (atw * y))) < 1e-9);

        // involution
        CHECK((omega_transpose(atw, t) - a).norm() < 1e-9);
    }
}

TEST_CASE("j_split decomposes into commuting and anticommuting parts") {
    std::mt19937 rng(777);
    for (int rep = 0; rep < 20; ++rep) {
        auto t = random_triple(4, rng);
        Matrix a = random_matrix(4, rng);
        auto s = j_split(a, t.j);
        CHECK((s.c + s.ac - a).norm() < 1e-12);
        CHECK((s.c * t.j - t.j * s.c).norm() < 1e-10);
        CHECK((s.ac * t.j + t.j * s.ac).norm() < 1e-10);

        Matrix q = random_matrix(4, rng);
        q = (q + q.transpose()).eval();
        auto f = j_split_form(q, t.j);
        CHECK((f.c + f.ac - q).norm() < 1e-12);
        // q^c(J., J.) = q^c and q^{ac}(J., J.) = -q^{ac}
        CHECK((t.j.transpose() * f.c * t.j - f.c).norm() < 1e-10);
        CHECK((t.j.transpose() * f.ac * t.j + f.ac).norm() < 1e-10);
    }
}
