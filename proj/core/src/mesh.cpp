#include "porobiot/mesh.hpp"

#include "porobiot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace porobiot {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

const char* to_string(Side side)
{
    switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
    }
    return "?";
}

namespace {

double signed_area(Vec2 a, Vec2 b, Vec2 c)
{
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

} // namespace

Mesh::Mesh(Rect domain, std::vector<Vec2> vertices, std::vector<std::array<std::size_t, 3>> cells)
    : domain_(domain), vertices_(std::move(vertices)), cells_(std::move(cells))
{
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        for (auto v : cells_[c]) {
            if (v >= vertices_.size()) throw MeshError("cell " + std::to_string(c) + " references a missing vertex");
        }
        const auto& t = cells_[c];
        if (!(signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]) > 0.0)) {
            throw MeshError("cell " + std::to_string(c) + " is degenerate or clockwise");
        }
    }
    build_edges();
    tag_boundary();
    for (std::size_t c = 0; c < cells_.size(); ++c) h_ = std::max(h_, cell_geometry(*this, c).diameter);
}

void Mesh::build_edges()
{
    std::map<std::array<std::size_t, 2>, std::size_t> index;
    cell_edges_.resize(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& t = cells_[c];
        for (int i = 0; i < 3; ++i) {
            const std::size_t a = t[(i + 1) % 3];
            const std::size_t b = t[(i + 2) % 3];
            const std::array<std::size_t, 2> key{std::min(a, b), std::max(a, b)};
            auto [it, inserted] = index.try_emplace(key, edges_.size());
            if (inserted) {
                edges_.push_back(key);
                edge_cells_.push_back({});
            }
            const std::size_t e = it->second;
            auto& adj = edge_cells_[e];
            if (!adj[0]) {
                adj[0] = c;
            } else if (!adj[1]) {
                adj[1] = c;
            } else {
                throw MeshError("edge shared by more than two cells");
            }
            // Counter-clockwise traversal a->b has the outward normal on its right,
            // which is the global normal exactly when a < b.
            cell_edges_[c][static_cast<std::size_t>(i)] = CellEdge{e, a < b ? +1 : -1};
        }
    }
}

void Mesh::tag_boundary()
{
    const double tol = 1e-10 * std::max(domain_.extent.x, domain_.extent.y);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (edge_cells_[e][1]) continue;
        const Vec2 a = vertices_[edges_[e][0]];
        const Vec2 b = vertices_[edges_[e][1]];
        auto on = [tol](double u, double v, double line) {
            return std::abs(u - line) < tol && std::abs(v - line) < tol;
        };
        if (on(a.x, b.x, domain_.origin.x)) {
            boundary_tags_[e] = Side::Left;
        } else if (on(a.x, b.x, domain_.xmax())) {
            boundary_tags_[e] = Side::Right;
        } else if (on(a.y, b.y, domain_.origin.y)) {
            boundary_tags_[e] = Side::Bottom;
        } else if (on(a.y, b.y, domain_.ymax())) {
            boundary_tags_[e] = Side::Top;
        }
    }
}

std::optional<Side> Mesh::boundary_tag(std::size_t edge) const
{
    auto it = boundary_tags_.find(edge);
    if (it == boundary_tags_.end()) return std::nullopt;
    return it->second;
}

std::array<std::optional<std::size_t>, 2> Mesh::edge_cells(std::size_t edge) const { return edge_cells_.at(edge); }

Vec2 Mesh::edge_midpoint(std::size_t edge) const
{
    const auto& e = edges_.at(edge);
    return 0.5 * (vertices_[e[0]] + vertices_[e[1]]);
}

double Mesh::edge_length(std::size_t edge) const
{
    const auto& e = edges_.at(edge);
    return norm(vertices_[e[1]] - vertices_[e[0]]);
}

Vec2 Mesh::edge_normal(std::size_t edge) const
{
    const auto& e = edges_.at(edge);
    const Vec2 t = vertices_[e[1]] - vertices_[e[0]];
    const double len = norm(t);
    return {t.y / len, -t.x / len};
}

Vec2 Mesh::centroid(std::size_t cell) const
{
    const auto& t = cells_.at(cell);
    return (1.0 / 3.0) * (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]);
}

std::optional<std::size_t> Mesh::locate(Vec2 point) const
{
    const double tol = 1e-12;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& t = cells_[c];
        const Vec2 a = vertices_[t[0]], b = vertices_[t[1]], d = vertices_[t[2]];
        const double area = signed_area(a, b, d);
        const double l0 = signed_area(point, b, d) / area;
        const double l1 = signed_area(a, point, d) / area;
        const double l2 = 1.0 - l0 - l1;
        if (l0 >= -tol && l1 >= -tol && l2 >= -tol) return c;
    }
    return std::nullopt;
}

Mesh generate_rect_mesh(Vec2 origin, Vec2 extent, int nx, int ny)
{
    if (nx < 1 || ny < 1) throw InputError("mesh counts must be >= 1");
    if (!(extent.x > 0.0) || !(extent.y > 0.0)) throw InputError("mesh extents must be positive");

    const auto nxu = static_cast<std::size_t>(nx);
    const auto nyu = static_cast<std::size_t>(ny);
    std::vector<Vec2> vertices;
    vertices.reserve((nxu + 1) * (nyu + 1));
    for (std::size_t j = 0; j <= nyu; ++j) {
        for (std::size_t i = 0; i <= nxu; ++i) {
            // Exact endpoints so boundary tagging never depends on rounding.
            const double x = i == nxu ? origin.x + extent.x : origin.x + extent.x * static_cast<double>(i) / nx;
            const double y = j == nyu ? origin.y + extent.y : origin.y + extent.y * static_cast<double>(j) / ny;
            vertices.push_back({x, y});
        }
    }
    auto vid = [nxu](std::size_t i, std::size_t j) { return j * (nxu + 1) + i; };
    std::vector<std::array<std::size_t, 3>> cells;
    cells.reserve(2 * nxu * nyu);
    for (std::size_t j = 0; j < nyu; ++j) {
        for (std::size_t i = 0; i < nxu; ++i) {
            const auto v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            cells.push_back({v00, v10, v11});
            cells.push_back({v00, v11, v01});
        }
    }
    return Mesh(Rect{origin, extent}, std::move(vertices), std::move(cells));
}

CellGeometry cell_geometry(const Mesh& mesh, std::size_t cell)
{
    const auto& t = mesh.cells().at(cell);
    const auto& v = mesh.vertices();
    const Vec2 a = v[t[0]], b = v[t[1]], c = v[t[2]];
    const double area = signed_area(a, b, c);
    if (!(area > 0.0)) throw MeshError("degenerate cell " + std::to_string(cell));
    // grad(lambda_i) = rot(opposite edge) / (2|T|), pointing towards vertex i.
    const double inv = 1.0 / (2.0 * area);
    CellGeometry g{};
    g.area = area;
    g.grad_lambda[0] = {inv * (b.y - c.y), inv * (c.x - b.x)};
    g.grad_lambda[1] = {inv * (c.y - a.y), inv * (a.x - c.x)};
    g.grad_lambda[2] = {inv * (a.y - b.y), inv * (b.x - a.x)};
    g.diameter = std::max({norm(b - a), norm(c - b), norm(a - c)});
    return g;
}

std::vector<std::size_t> boundary_edges(const Mesh& mesh, Side tag)
{
    std::vector<std::size_t> out;
    for (const auto& [edge, side] : mesh.boundary_tags()) {
        if (side == tag) out.push_back(edge);
    }
    return out;
}

void write_mesh(std::ostream& out, const Mesh& mesh)
{
    out << mesh.num_vertices() << ' ' << mesh.num_edges() << ' ' << mesh.num_cells() << '\n';
    out.precision(17);
    for (const auto& p : mesh.vertices()) out << p.x << ' ' << p.y << '\n';
    for (const auto& c : mesh.cells()) out << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const auto tag = mesh.boundary_tag(e);
        out << mesh.edges()[e][0] << ' ' << mesh.edges()[e][1] << ' ' << (tag ? static_cast<int>(*tag) : -1) << '\n';
    }
}

} // namespace porobiot
