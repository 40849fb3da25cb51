#include <catch2/catch_amalgamated.hpp>

#include <scf/curvature.hpp>

#include <random>

using namespace scf;

namespace {

CompatibleTriple standard_triple(Eigen::Index dim,
                                 const std::vector<std::array<double, 3>>& omega_terms) {
    return build_triple(two_form(dim, omega_terms), Matrix::Identity(dim, dim));
}

struct Structure {
    BracketTensor mu;
    CompatibleTriple triple;
};

Structure make(const std::string& shorthand,
               const std::vector<std::array<double, 3>>& omega_terms) {
    Structure s{parse_shorthand(shorthand, 4), standard_triple(4, omega_terms)};
    REQUIRE(jacobi_residual(s.mu) < 1e-12);
    REQUIRE(closedness_residual(s.mu, s.triple) < 1e-12);
    return s;
}

/// Equivalent structure in the basis h e_1, ..., h e_n.
Structure transport(const Structure& s, const Matrix& h) {
    const Matrix hi = h.inverse();
    Structure out{pushforward(s.mu, h),
                  build_triple(hi.transpose() * s.triple.omega * hi,
                               hi.transpose() * s.triple.metric * hi)};
    return out;
}

Matrix random_gl(std::mt19937& gen, Eigen::Index n) {
    std::normal_distribution<double> d;
    while (true) {
        Matrix h(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) h(i, j) = (i == j) + 0.4 * d(gen);
        if (std::abs(h.determinant()) > 0.1) return h;
    }
}

}  // namespace

TEST_CASE("abelian structure is flat") {
    BracketTensor mu(4);
    const auto t = standard_triple(4, {{{1, 2, 1}, {3, 4, 1}}});
    const CurvatureReport r = curvature(mu, t);
    CHECK(r.p.norm() == 0.0);
    CHECK(r.P.norm() == 0.0);
    CHECK(r.ric.norm() == 0.0);
    CHECK(r.scalar == 0.0);
    CHECK(r.chern_scalar == 0.0);
    REQUIRE(r.z.has_value());
    CHECK(r.z->norm() == 0.0);
    const ScfRhs rhs = scf_rhs(t, mu);
    CHECK(rhs.omega_dot.norm() == 0.0);
    CHECK(rhs.metric_dot.norm() == 0.0);
}

TEST_CASE("Heisenberg times R at its soliton metric") {
    const auto s = make("(0,0,12,0)", {{{1, 4, 1}, {2, 3, 1}}});
    const CurvatureReport r = curvature(s.mu, s.triple);

    CHECK(r.P.norm() < 1e-13);
    CHECK(r.chern_scalar == Catch::Approx(0.0).margin(1e-13));

    Vector ric_diag(4);
    ric_diag << -0.5, -0.5, 0.5, 0.0;
    CHECK((r.ric - Matrix(ric_diag.asDiagonal())).norm() < 1e-13);
    Vector ac_diag(4);
    ac_diag << -0.25, -0.5, 0.5, 0.25;
    CHECK((r.ric_ac - Matrix(ac_diag.asDiagonal())).norm() < 1e-13);
    CHECK(r.scalar == Catch::Approx(-0.5));

    const ScfRhs rhs = scf_rhs(s.triple, s.mu);
    CHECK(rhs.omega_dot.norm() < 1e-13);
    CHECK((rhs.metric_dot + 2.0 * Matrix(ac_diag.asDiagonal())).norm() < 1e-13);

    CHECK(nijenhuis_residual(s.mu, s.triple) == Catch::Approx(1.0));
}

TEST_CASE("almost-abelian surface family matches its displayed operators") {
    // ad e_4 = [[0,b,c],[0,d,e],[0,f,-d]] on span(e_1,e_2,e_3), omega = e14+e23.
    const auto family = [](double b, double c, double d, double e, double f) {
        BracketTensor mu(4);
        const double a[3][3] = {{0, b, c}, {0, d, e}, {0, f, -d}};
        for (int col = 0; col < 3; ++col)
            for (int row = 0; row < 3; ++row)
                if (a[row][col] != 0.0) mu.add(3, col, row, a[row][col]);
        return mu;
    };
    const auto t = standard_triple(4, {{{1, 4, 1}, {2, 3, 1}}});

    SECTION("pinned point (b,c,d,e,f) = (1,0,0,1,0)") {
        const BracketTensor mu = family(1, 0, 0, 1, 0);
        const CurvatureReport r = curvature(mu, t);
        Matrix p_expected = Matrix::Zero(4, 4);
        p_expected(0, 2) = -0.5;
        p_expected(1, 3) = 0.5;
        CHECK((r.P - p_expected).norm() < 1e-14);
        Vector ac(4);
        ac << 0.75, 0.25, -0.25, -0.75;
        CHECK((r.ric_ac - Matrix(ac.asDiagonal())).norm() < 1e-14);
    }

    SECTION("random points against the closed forms") {
        std::mt19937 gen(11);
        std::normal_distribution<double> dist;
        for (int rep = 0; rep < 30; ++rep) {
            const double b = dist(gen), c = dist(gen), d = dist(gen), e = dist(gen),
                         f = dist(gen);
            const BracketTensor mu = family(b, c, d, e, f);
            REQUIRE(closedness_residual(mu, t) < 1e-12);
            const CurvatureReport r = curvature(mu, t);

            Matrix pe = Matrix::Zero(4, 4);
            pe(0, 1) = -(d * b + f * c) / 2;
            pe(0, 2) = -(e * b - d * c) / 2;
            pe(1, 3) = (e * b - d * c) / 2;
            pe(2, 3) = -(d * b + f * c) / 2;
            CHECK((r.P - pe).norm() < 1e-10);

            Matrix ae(4, 4);
            ae << d * d + (b * b + c * c) / 2 + (e + f) * (e + f) / 4, (d * b + c * e) / 4,
                (b * f - d * c) / 4, 0,                                           //
                (d * b + c * e) / 4, (e * e - f * f) / 2 - (b * b - c * c) / 4,
                d * (f - e) - b * c / 2, (b * f - d * c) / 4,                     //
                (b * f - d * c) / 4, d * (f - e) - b * c / 2,
                (f * f - e * e) / 2 + (b * b - c * c) / 4, -(d * b + c * e) / 4,  //
                0, (b * f - d * c) / 4, -(d * b + c * e) / 4,
                -d * d - (b * b + c * c) / 2 - (e + f) * (e + f) / 4;
            CHECK((r.ric_ac - ae).norm() < 1e-10);
        }
    }
}

TEST_CASE("Kaehler-Einstein product r2 x r2") {
    const auto s = make("(0,12,0,34)", {{{1, 2, 1}, {3, 4, 1}}});
    const CurvatureReport r = curvature(s.mu, s.triple);

    CHECK((r.P + Matrix::Identity(4, 4)).norm() < 1e-14);
    CHECK((r.ric + Matrix::Identity(4, 4)).norm() < 1e-14);
    CHECK(r.ric_ac.norm() < 1e-14);
    CHECK(nijenhuis_residual(s.mu, s.triple) < 1e-14);

    // Kaehler specialization: p composed with J is the Ricci form.
    CHECK((r.p * s.triple.j - s.triple.metric * r.ric).norm() < 1e-14);

    const ScfRhs rhs = scf_rhs(s.triple, s.mu);
    CHECK((rhs.omega_dot - 2.0 * s.triple.omega).norm() < 1e-14);
    CHECK((rhs.metric_dot - 2.0 * s.triple.metric).norm() < 1e-14);

    // Z recovery and the operator cross-check P = ad_Z + (ad_Z)^{t_w}.
    REQUIRE(r.z.has_value());
    Vector z_expected(4);
    z_expected << -1, 0, -1, 0;
    CHECK((*r.z - z_expected).norm() < 1e-12);
    const Matrix ad_z = s.mu.ad(*r.z);
    CHECK((ad_z + omega_transpose(ad_z, s.triple) - r.P).norm() < 1e-12);
}

TEST_CASE("curvature identities on transported structures") {
    const std::vector<Structure> base = {
        make("(0,0,12,0)", {{{1, 4, 1}, {2, 3, 1}}}),
        make("(0,12,0,34)", {{{1, 2, 1}, {3, 4, 1}}}),
        make("(0,41,42,0)", {{{1, 2, 1}, {3, 4, 1}}}),
        make("(1/2*41+42,1/2*42,12+43,0)", {{{1, 2, 1}, {3, 4, -1}}}),
    };
    std::mt19937 gen(23);
    for (int rep = 0; rep < 50; ++rep) {
        const Structure& b = base[static_cast<size_t>(rep) % base.size()];
        const Structure s = transport(b, random_gl(gen, 4));
        REQUIRE(closedness_residual(s.mu, s.triple) < 1e-9);
        const CurvatureReport r = curvature(s.mu, s.triple);
        const double scale = 1.0 + r.P.norm() + r.ric.norm();

        // p antisymmetric, consistent with P, and closed.
        CHECK((r.p + r.p.transpose()).norm() < 1e-10 * scale);
        CHECK((r.p - s.triple.omega * r.P).norm() < 1e-10 * scale);
        CHECK(closedness_residual(s.mu, r.p) < 1e-9 * scale);
        CHECK((omega_transpose(r.P, s.triple) - r.P).norm() < 1e-9 * scale);

        // Ricci g-self-adjoint, anti-invariant part J-anti-invariant.
        const Matrix ric_form = s.triple.metric * r.ric;
        CHECK((ric_form - ric_form.transpose()).norm() < 1e-9 * scale);
        CHECK((s.triple.j * r.ric_ac * s.triple.j - r.ric_ac).norm() < 1e-9 * scale);

        const ScfRhs rhs = scf_rhs(s.triple, s.mu);
        CHECK((rhs.omega_dot + rhs.omega_dot.transpose()).norm() < 1e-10 * scale);
        CHECK((rhs.metric_dot - rhs.metric_dot.transpose()).norm() < 1e-9 * scale);
        CHECK(closedness_residual(s.mu, rhs.omega_dot) < 1e-9 * scale);
    }
}

TEST_CASE("curvature is equivariant under equivalence") {
    const Structure b = make("(0,0,12,0)", {{{1, 4, 1}, {2, 3, 1}}});
    std::mt19937 gen(31);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix h = random_gl(gen, 4);
        const Structure s = transport(b, h);
        const CurvatureReport r0 = curvature(b.mu, b.triple);
        const CurvatureReport r1 = curvature(s.mu, s.triple);
        CHECK((r1.P - h * r0.P * h.inverse()).norm() < 1e-9);
        CHECK((r1.ric - h * r0.ric * h.inverse()).norm() < 1e-9);
        CHECK(r1.scalar == Catch::Approx(r0.scalar).margin(1e-10));
        CHECK(r1.chern_scalar == Catch::Approx(r0.chern_scalar).margin(1e-10));
    }
}

TEST_CASE("J evolves by -2JP^ac - 2J ric^ac along the flow") {
    const std::vector<Structure> cases = {
        make("(0,0,12,0)", {{{1, 4, 1}, {2, 3, 1}}}),
        make("(0,41,42,0)", {{{1, 2, 1}, {3, 4, 1}}}),
    };
    std::mt19937 gen(41);
    for (const auto& b : cases) {
        for (int rep = 0; rep < 5; ++rep) {
            const Structure s = rep == 0 ? b : transport(b, random_gl(gen, 4));
            const CurvatureReport r = curvature(s.mu, s.triple);
            const ScfRhs rhs = scf_rhs(s.triple, s.mu);

            const double eps = 1e-6;
            const auto j_at = [&](double dt) {
                return build_triple(s.triple.omega + dt * rhs.omega_dot,
                                    s.triple.metric + dt * rhs.metric_dot).j;
            };
            const Matrix j_dot_fd = (j_at(eps) - j_at(-eps)) / (2 * eps);
            const Matrix p_ac = j_split(r.P, s.triple.j).ac;
            const Matrix j_dot = -2.0 * s.triple.j * p_ac - 2.0 * s.triple.j * r.ric_ac;
            CHECK((j_dot_fd - j_dot).norm() < 1e-5 * (1.0 + j_dot.norm()));
            const Matrix j_dot_alt =
                -2.0 * s.triple.j * p_ac + r.ric * s.triple.j - s.triple.j * r.ric;
            CHECK((j_dot - j_dot_alt).norm() < 1e-10 * (1.0 + j_dot.norm()));
        }
    }
}

TEST_CASE("curvature preconditions reject invalid input") {
    // (12,13,0,0) fails the Jacobi identity.
    BracketTensor bad(4);
    bad.add(0, 1, 0, 1.0);
    bad.add(0, 2, 1, 1.0);
    const auto t = standard_triple(4, {{{1, 2, 1}, {3, 4, 1}}});
    CHECK(jacobi_residual(bad) > 0.5);
    CHECK_THROWS_AS(curvature(bad, t), ValidationError);

    // rh3 with the wrong symplectic form: omega not closed.
    const BracketTensor mu = parse_shorthand("(0,0,12,0)", 4);
    const auto t_bad = standard_triple(4, {{{1, 2, 1}, {3, 4, 1}}});
    CHECK(closedness_residual(mu, t_bad) > 0.5);
    CHECK_THROWS_AS(chern_ricci(mu, t_bad), ValidationError);
}
