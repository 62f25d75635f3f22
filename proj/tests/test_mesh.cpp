#include "porobiot/errors.hpp"
#include "porobiot/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace porobiot;

TEST(Mesh, SmallestMeshCounts)
{
    const auto m = generate_rect_mesh({0, 0}, {1, 1}, 1, 1);
    EXPECT_EQ(m.num_vertices(), 4u);
    EXPECT_EQ(m.num_edges(), 5u);
    EXPECT_EQ(m.num_cells(), 2u);
    EXPECT_EQ(4 - 5 + 2, 1);
}

TEST(Mesh, TwoByTwoCounts)
{
    const auto m = generate_rect_mesh({0, 0}, {1, 1}, 2, 2);
    EXPECT_EQ(m.num_vertices(), 9u);
    EXPECT_EQ(m.num_edges(), 16u);
    EXPECT_EQ(m.num_cells(), 8u);
}

TEST(Mesh, MandelGrid)
{
    const auto m = generate_rect_mesh({0, 0}, {100, 10}, 40, 40);
    EXPECT_EQ(m.num_vertices(), 1681u);
    EXPECT_EQ(m.num_cells(), 3200u);
    for (Side s : kAllSides) EXPECT_EQ(boundary_edges(m, s).size(), 40u) << to_string(s);
}

TEST(Mesh, InvalidInput)
{
    EXPECT_THROW(generate_rect_mesh({0, 0}, {1, 1}, 0, 1), InputError);
    EXPECT_THROW(generate_rect_mesh({0, 0}, {1, 1}, 1, -2), InputError);
    EXPECT_THROW(generate_rect_mesh({0, 0}, {0, 1}, 1, 1), InputError);
    EXPECT_THROW(generate_rect_mesh({0, 0}, {1, -1}, 1, 1), InputError);
}

class MeshInvariants : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(MeshInvariants, Hold)
{
    const auto [nx, ny] = GetParam();
    const auto m = generate_rect_mesh({-1.0, 2.0}, {3.0, 0.5}, nx, ny);
    const long V = static_cast<long>(m.num_vertices()), E = static_cast<long>(m.num_edges()), F = static_cast<long>(m.num_cells());
    EXPECT_EQ(V - E + F, 1);

    // Edge ordering and cell-incidence counts.
    std::vector<int> incidence(m.num_edges(), 0);
    std::vector<int> sign_product(m.num_edges(), 1);
    double area = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const auto g = cell_geometry(m, c);
        EXPECT_GT(g.area, 0.0);
        area += g.area;
        for (const auto& ce : m.cell_edges(c)) {
            ++incidence[ce.edge];
            sign_product[ce.edge] *= ce.sign;
        }
    }
    EXPECT_NEAR(area, 1.5, 1.5e-12);
    std::size_t boundary = 0;
    for (std::size_t e = 0; e < m.num_edges(); ++e) {
        EXPECT_LT(m.edges()[e][0], m.edges()[e][1]);
        if (m.boundary_tag(e)) {
            ++boundary;
            EXPECT_EQ(incidence[e], 1);
        } else {
            EXPECT_EQ(incidence[e], 2);
            EXPECT_EQ(sign_product[e], -1);
        }
    }
    EXPECT_EQ(boundary, static_cast<std::size_t>(2 * (nx + ny)));

    // Tagged edges lie on their side; the union covers all boundary edges.
    std::set<std::size_t> all;
    for (Side s : kAllSides) {
        for (std::size_t e : boundary_edges(m, s)) {
            EXPECT_TRUE(all.insert(e).second) << "edge on two sides";
            for (std::size_t v : m.edges()[e]) {
                const Vec2 x = m.vertices()[v];
                switch (s) {
                case Side::Left: EXPECT_DOUBLE_EQ(x.x, -1.0); break;
                case Side::Right: EXPECT_DOUBLE_EQ(x.x, 2.0); break;
                case Side::Bottom: EXPECT_DOUBLE_EQ(x.y, 2.0); break;
                case Side::Top: EXPECT_DOUBLE_EQ(x.y, 2.5); break;
                }
            }
        }
    }
    EXPECT_EQ(all.size(), boundary);
}

INSTANTIATE_TEST_SUITE_P(Grids, MeshInvariants, ::testing::Values(std::tuple{1, 1}, std::tuple{2, 3}, std::tuple{7, 4}, std::tuple{16, 16}));

TEST(Mesh, OutwardSignMatchesGeometry)
{
    const auto m = generate_rect_mesh({0, 0}, {1, 1}, 3, 2);
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const Vec2 centre = m.centroid(c);
        for (const auto& ce : m.cell_edges(c)) {
            const Vec2 out = m.edge_midpoint(ce.edge) - centre;
            EXPECT_GT(ce.sign * dot(m.edge_normal(ce.edge), out), 0.0);
        }
    }
}

TEST(Mesh, RefinementHalvesSize)
{
    const auto a = generate_rect_mesh({0, 0}, {1, 1}, 4, 4);
    const auto b = generate_rect_mesh({0, 0}, {1, 1}, 8, 8);
    EXPECT_NEAR(a.mesh_size(), std::sqrt(2.0) / 4.0, 1e-14);
    EXPECT_NEAR(b.mesh_size(), a.mesh_size() / 2.0, 1e-14);
    EXPECT_NEAR(cell_geometry(b, 0).area, cell_geometry(a, 0).area / 4.0, 1e-15);
}

TEST(CellGeometry, ReferenceTriangle)
{
    const Mesh m(Rect{{0, 0}, {1, 1}}, {{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const auto g = cell_geometry(m, 0);
    EXPECT_DOUBLE_EQ(g.area, 0.5);
    EXPECT_NEAR(g.grad_lambda[0].x, -1.0, 1e-15);
    EXPECT_NEAR(g.grad_lambda[0].y, -1.0, 1e-15);
    EXPECT_NEAR(g.grad_lambda[1].x, 1.0, 1e-15);
    EXPECT_NEAR(g.grad_lambda[1].y, 0.0, 1e-15);
    EXPECT_NEAR(g.grad_lambda[2].x, 0.0, 1e-15);
    EXPECT_NEAR(g.grad_lambda[2].y, 1.0, 1e-15);
    EXPECT_NEAR(g.diameter, std::sqrt(2.0), 1e-15);
}

TEST(CellGeometry, ScaledTriangle)
{
    const Mesh m(Rect{{0, 0}, {2, 2}}, {{0, 0}, {2, 0}, {0, 2}}, {{0, 1, 2}});
    const auto g = cell_geometry(m, 0);
    EXPECT_DOUBLE_EQ(g.area, 2.0);
    EXPECT_NEAR(g.grad_lambda[0].x, -0.5, 1e-15);
    EXPECT_NEAR(g.grad_lambda[1].x, 0.5, 1e-15);
    EXPECT_NEAR(g.grad_lambda[2].y, 0.5, 1e-15);
}

TEST(CellGeometry, GradientsSumToZero)
{
    const auto m = generate_rect_mesh({0.3, -0.2}, {1.7, 0.9}, 5, 3);
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const auto g = cell_geometry(m, c);
        EXPECT_NEAR(g.grad_lambda[0].x + g.grad_lambda[1].x + g.grad_lambda[2].x, 0.0, 1e-12);
        EXPECT_NEAR(g.grad_lambda[0].y + g.grad_lambda[1].y + g.grad_lambda[2].y, 0.0, 1e-12);
    }
}

TEST(CellGeometry, DegenerateCellRejected)
{
    EXPECT_THROW(Mesh(Rect{{0, 0}, {1, 1}}, {{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}), MeshError);
}

TEST(Mesh, SmallSideQueries)
{
    const auto m = generate_rect_mesh({0, 0}, {1, 1}, 2, 2);
    const auto bottom = boundary_edges(m, Side::Bottom);
    ASSERT_EQ(bottom.size(), 2u);
    for (auto e : bottom)
        for (auto v : m.edges()[e]) EXPECT_EQ(m.vertices()[v].y, 0.0);
    const auto one = generate_rect_mesh({0, 0}, {1, 1}, 1, 1);
    std::size_t total = 0;
    for (Side s : kAllSides) total += boundary_edges(one, s).size();
    EXPECT_EQ(total, 4u);
}

TEST(Mesh, LocateAndDump)
{
    const auto m = generate_rect_mesh({0, 0}, {2, 1}, 4, 2);
    const auto c = m.locate({1.3, 0.7});
    ASSERT_TRUE(c.has_value());
    EXPECT_FALSE(m.locate({3.0, 0.5}).has_value());

    std::ostringstream os;
    write_mesh(os, m);
    std::istringstream is(os.str());
    std::size_t V, E, F;
    is >> V >> E >> F;
    EXPECT_EQ(V, m.num_vertices());
    EXPECT_EQ(E, m.num_edges());
    EXPECT_EQ(F, m.num_cells());
    std::size_t lines = 0;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) ++lines;
    EXPECT_EQ(lines, V + E + F);
}
