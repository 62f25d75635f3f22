#include "oracles.hpp"

#include "porobiot/assembly.hpp"
#include "porobiot/errors.hpp"
#include "porobiot/schemes.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace porobiot;

namespace {

std::shared_ptr<const Mesh> square(int n, Vec2 origin = {0, 0}, Vec2 extent = {1, 1})
{
    return std::make_shared<const Mesh>(generate_rect_mesh(origin, extent, n, n));
}

Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

void expect_matrix_near(const SparseMatrix& got, const Eigen::MatrixXd& want, double tol, const char* name)
{
    ASSERT_EQ(got.rows(), want.rows()) << name;
    ASSERT_EQ(got.cols(), want.cols()) << name;
    EXPECT_LT((dense(got) - want).cwiseAbs().maxCoeff(), tol) << name;
}

} // namespace

class OperatorOracle : public ::testing::TestWithParam<int> {};

TEST_P(OperatorOracle, MatchesIndependentAssembly)
{
    const int n = GetParam();
    auto mesh = square(n, {0.5, -0.25}, {2.0, 1.5});
    auto mat = unit_material();
    mat.mu = 1.7;
    mat.nu_f = 0.3;
    mat.permeability = [](Vec2) { return 0.6; };
    const auto disc = discretize(mesh, mat, manufactured_problem(unit_material()));
    const auto o = oracle::operators(*mesh, mat.mu, mat.nu_f / 0.6);
    expect_matrix_near(disc.ops.A_e, o.A_e, 1e-12, "A_e");
    expect_matrix_near(disc.ops.D, o.D, 1e-12, "D");
    expect_matrix_near(disc.ops.B_up, o.B_up, 1e-12, "B_up");
    expect_matrix_near(disc.ops.M_q, o.M_q, 1e-12, "M_q");
    expect_matrix_near(disc.ops.B_qp, o.B_qp, 1e-12, "B_qp");
    expect_matrix_near(disc.ops.M_p, o.M_p, 1e-12, "M_p");
}

INSTANTIATE_TEST_SUITE_P(Meshes, OperatorOracle, ::testing::Values(1, 2, 3));

TEST(Operators, Symmetry)
{
    const auto disc = discretize(square(4), unit_material(), manufactured_problem(unit_material()));
    EXPECT_TRUE(is_symmetric(disc.ops.A_e));
    EXPECT_TRUE(is_symmetric(disc.ops.D));
    EXPECT_TRUE(is_symmetric(disc.ops.M_q));
    EXPECT_TRUE(is_symmetric(disc.ops.M_p));
    EXPECT_TRUE(is_symmetric(disc.mass_u));
    EXPECT_TRUE(is_symmetric(disc.mass_q));
}

TEST(Operators, RigidMotionsInElasticNullSpace)
{
    auto mesh = square(3);
    const auto disc = discretize(mesh, unit_material(), manufactured_problem(unit_material()));
    for (const VectorField& f : {VectorField([](Vec2) { return Vec2{1, 0}; }), VectorField([](Vec2) { return Vec2{0, 1}; }),
                                 VectorField([](Vec2 x) { return Vec2{-x.y, x.x}; })}) {
        const Vector u = interpolate_p1_vector(disc.p1v, f).coeffs;
        EXPECT_LT((disc.ops.A_e * u).norm(), 1e-13);
    }
    const Vector t = interpolate_p1_vector(disc.p1v, [](Vec2) { return Vec2{1, 0}; }).coeffs;
    EXPECT_LT((disc.ops.D * t).norm(), 1e-13);
}

TEST(Operators, SimpleFieldIdentities)
{
    auto mesh = square(4);
    const auto disc = discretize(mesh, unit_material(), manufactured_problem(unit_material()));
    const Vector u = interpolate_p1_vector(disc.p1v, [](Vec2 x) { return x; }).coeffs;
    EXPECT_NEAR(u.dot(disc.ops.D * u), 4.0, 1e-12);

    const Vector z = interpolate_p1_vector(disc.p1v, [](Vec2 x) { return Vec2{x.x, 0}; }).coeffs;
    const Vector one = Vector::Ones(static_cast<Eigen::Index>(mesh->num_cells()));
    EXPECT_NEAR(z.dot(disc.ops.B_up * one), 1.0, 1e-12);

    const Eigen::MatrixXd Mp = dense(disc.ops.M_p);
    EXPECT_NEAR((Mp - Eigen::MatrixXd(Mp.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0, 0.0);
    EXPECT_NEAR(Mp.diagonal().sum(), 1.0, 1e-14);

    const Vector q = interpolate_rt0(disc.rt0, [](Vec2) { return Vec2{1, 0}; }).coeffs;
    EXPECT_NEAR(q.dot(disc.ops.M_q * q), 1.0, 1e-12);
    // Divergence of a constant field vanishes cell by cell.
    EXPECT_LT((disc.ops.B_qp * q).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Operators, DivergenceBoundedByStrainEnergy)
{
    // |div u|^2 <= 2 |eps(u)|^2 pointwise, so u'Du <= u'A_e u / mu.
    auto mesh = square(5);
    auto mat = unit_material();
    mat.mu = 0.7;
    const auto disc = discretize(mesh, mat, manufactured_problem(mat));
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    for (int k = 0; k < 100; ++k) {
        Vector u(disc.ops.A_e.rows());
        for (auto& x : u) x = g(rng);
        const double d = u.dot(disc.ops.D * u);
        const double a = u.dot(disc.ops.A_e * u);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(d, a / mat.mu * (1 + 1e-12));
    }
}

TEST(Operators, UndrainedIdentity)
{
    const auto disc = discretize(square(3), unit_material(), manufactured_problem(unit_material()));
    const Eigen::MatrixXd B = dense(disc.ops.B_up);
    const Eigen::MatrixXd Mp_inv = dense(disc.ops.M_p).diagonal().cwiseInverse().asDiagonal();
    EXPECT_LT((B * Mp_inv * B.transpose() - dense(disc.ops.D)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Operators, NonPositivePermeabilityRejected)
{
    auto mat = unit_material();
    mat.permeability = [](Vec2 x) { return x.x - 0.5; };
    EXPECT_THROW(discretize(square(2), mat, manufactured_problem(unit_material())), AssumptionError);
}

TEST(NonlinearRhs, DocumentedValues)
{
    auto mesh = square(2);
    const auto mat = unit_material(LawCase::T1C1);
    const auto disc = discretize(mesh, mat, manufactured_problem(mat));
    const double area = 0.125;

    const Vector zero_u = Vector::Zero(disc.ops.A_e.rows());
    const Vector zero_p = Vector::Zero(static_cast<Eigen::Index>(mesh->num_cells()));
    auto r = assemble_nonlinear_rhs(zero_u, zero_p, disc.ops, mat);
    for (auto v : r.bp) EXPECT_NEAR(v, area, 1e-15);
    EXPECT_LT(r.hu.norm(), 1e-15);

    // u = x gives div u = 2, h = 8 on every cell.
    const Vector u = interpolate_p1_vector(disc.p1v, [](Vec2 x) { return x; }).coeffs;
    r = assemble_nonlinear_rhs(u, zero_p, disc.ops, mat);
    EXPECT_NEAR(r.hu.dot(u), 8.0 * 2.0 * 1.0, 1e-12);
    const Vector expected = disc.ops.B_up * Vector::Constant(zero_p.size(), 8.0);
    EXPECT_LT((r.hu - expected).norm(), 1e-12);
    EXPECT_EQ(r.out_of_range, 0u);
}

TEST(Loads, ManufacturedSourceMatchesIndependentQuadrature)
{
    auto mesh = square(3);
    const auto mat = unit_material();
    const auto prob = manufactured_problem(mat);
    const auto disc = discretize(mesh, mat, prob);
    const double t = 0.7;
    const auto loads = assemble_loads(disc, prob, mat, t);
    for (std::size_t c = 0; c < mesh->num_cells(); ++c) {
        const auto v = oracle::corners(*mesh, c);
        const double want = oracle::integrate(v[0], v[1], v[2], [&](Vec2 x) { return prob.source(x, t); });
        EXPECT_NEAR(loads.s[static_cast<Eigen::Index>(c)], want, 1e-14);
    }
    const auto zero = assemble_loads(disc, prob, mat, 0.0);
    EXPECT_LT(zero.f.norm(), 1e-14);
    EXPECT_LT(zero.g.norm(), 1e-14);
}

TEST(Constraints, ManufacturedBoundaryValues)
{
    auto mesh = square(4);
    const auto mat = unit_material();
    const auto prob = manufactured_problem(mat);
    const auto disc = discretize(mesh, mat, prob);
    EXPECT_EQ(disc.u_constraints.fixed_dofs().size(), 2u * 16u);
    EXPECT_EQ(disc.u_constraints.n_reduced(), 2u * 9u);
    const auto ev = essential_values(disc, prob, 0.6);
    EXPECT_LT(ev.u.norm(), 1e-15);
    EXPECT_LT(ev.q.norm(), 1e-15);
}

TEST(Constraints, MandelLayout)
{
    const auto mat = mandel_material();
    const auto cfg = make_mandel_config(mat);
    const auto prob = mandel_problem(mat, cfg);
    auto mesh = square(8, {0, 0}, {100, 10});
    const auto disc = discretize(mesh, mat, prob);

    // No-flow on left, bottom and top.
    EXPECT_EQ(disc.q_constraints.fixed_dofs().size(), 24u);
    const auto ev = essential_values(disc, prob, 3.0);
    EXPECT_EQ(ev.q.norm(), 0.0);
    EXPECT_EQ(ev.u.norm(), 0.0);

    // One tied group holding the vertical DOFs of the nine top vertices.
    ASSERT_EQ(disc.u_constraints.tied_groups().size(), 1u);
    const auto& group = disc.u_constraints.tied_groups()[0];
    EXPECT_EQ(group.size(), 9u);
    Vector reduced = Vector::LinSpaced(static_cast<Eigen::Index>(disc.u_constraints.n_reduced()), 1.0, 2.0);
    const Vector full = disc.u_constraints.expand(reduced, Vector::Zero(disc.ops.A_e.rows()));
    for (auto d : group) {
        EXPECT_EQ(d % 2, 1u);
        EXPECT_EQ(mesh->vertices()[d / 2].y, 10.0);
        EXPECT_EQ(full[static_cast<Eigen::Index>(d)], full[static_cast<Eigen::Index>(group.front())]);
    }

    // The plate load sits on the group master only and restricts to -F.
    const auto loads = assemble_loads(disc, prob, mat, 1.0);
    EXPECT_NEAR(loads.f.sum(), -cfg.load, 1e-9);
    const Vector rf = disc.u_constraints.restrict_dual(loads.f);
    EXPECT_NEAR(rf[disc.u_constraints.reduced_index(group.front())], -cfg.load, 1e-9);
    EXPECT_LT(loads.g.norm(), 1e-15);
    EXPECT_LT(loads.s.norm(), 1e-15);
}

TEST(Constraints, ConflictsRejected)
{
    FieldConstraints c(4);
    c.fix(1);
    EXPECT_THROW(c.tie(1, 0), ConfigurationError);
    FieldConstraints d(4);
    d.tie(2, 0);
    EXPECT_THROW(d.fix(2), ConfigurationError);
}

TEST(Constraints, EliminationMatchesDenseReduction)
{
    FieldConstraints c(5);
    c.fix(0);
    c.tie(2, 0);
    c.tie(4, 0);
    c.finalize();
    EXPECT_EQ(c.n_reduced(), 3u);

    Eigen::MatrixXd A(5, 5);
    A << 4, 1, 0, 0, 1, 1, 5, 1, 0, 0, 0, 1, 6, 1, 0, 0, 0, 1, 7, 1, 1, 0, 0, 1, 8;
    const SparseMatrix As = A.sparseView();
    Vector rhs(5);
    rhs << 1, 2, 3, 4, 5;
    Vector g = Vector::Zero(5);
    g[0] = 0.5;
    const auto sys = apply_essential_bc({{&As}}, {rhs}, {&c}, {g});

    const Eigen::MatrixXd T = dense(c.prolongation());
    const Eigen::MatrixXd want = T.transpose() * A * T;
    EXPECT_LT((dense(sys.matrix) - want).cwiseAbs().maxCoeff(), 1e-14);
    const Vector want_rhs = T.transpose() * (rhs - A * g);
    EXPECT_LT((sys.rhs - want_rhs).norm(), 1e-14);
}

TEST(Operators, Dump)
{
    const auto disc = discretize(square(2), unit_material(), manufactured_problem(unit_material()));
    std::ostringstream os;
    write_operator(os, disc.ops.B_qp);
    std::istringstream is(os.str());
    std::string line;
    long lines = 0;
    double sum = 0.0;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        long r, c;
        double v;
        ASSERT_TRUE(ls >> r >> c >> v) << line;
        ++lines;
        sum += v;
    }
    EXPECT_EQ(lines, static_cast<long>(disc.ops.B_qp.nonZeros()));
    EXPECT_NEAR(sum, dense(disc.ops.B_qp).sum(), 1e-12);
}
