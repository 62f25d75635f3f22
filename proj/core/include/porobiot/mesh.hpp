#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

namespace porobiot {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a);

enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };
inline constexpr std::array<Side, 4> kAllSides = {Side::Left, Side::Right, Side::Bottom, Side::Top};
const char* to_string(Side side);

struct Rect {
    Vec2 origin;
    Vec2 extent;

    [[nodiscard]] double xmax() const { return origin.x + extent.x; }
    [[nodiscard]] double ymax() const { return origin.y + extent.y; }
    [[nodiscard]] double area() const { return extent.x * extent.y; }
};

struct CellEdge {
    std::size_t edge;
    // +1 when the global edge normal points out of this cell.
    int sign;
};

struct CellGeometry {
    double area;
    // Gradients of the three barycentric coordinates.
    std::array<Vec2, 3> grad_lambda;
    double diameter;
};

/// Conforming triangulation of an axis-aligned rectangle.
///
/// Edges are stored with the lower vertex index first; the global edge normal
/// is the edge tangent (low -> high) rotated clockwise by 90 degrees. Local
/// edge i of a cell is the edge opposite local vertex i.
class Mesh {
  public:
    Mesh(Rect domain,
         std::vector<Vec2> vertices,
         std::vector<std::array<std::size_t, 3>> cells);

    [[nodiscard]] const Rect& domain() const noexcept { return domain_; }
    [[nodiscard]] std::size_t num_vertices() const noexcept { return vertices_.size(); }
    [[nodiscard]] std::size_t num_edges() const noexcept { return edges_.size(); }
    [[nodiscard]] std::size_t num_cells() const noexcept { return cells_.size(); }

    [[nodiscard]] const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<std::array<std::size_t, 3>>& cells() const noexcept { return cells_; }
    [[nodiscard]] const std::vector<std::array<std::size_t, 2>>& edges() const noexcept { return edges_; }
    [[nodiscard]] const std::array<CellEdge, 3>& cell_edges(std::size_t cell) const { return cell_edges_.at(cell); }
    [[nodiscard]] const std::map<std::size_t, Side>& boundary_tags() const noexcept { return boundary_tags_; }
    [[nodiscard]] std::optional<Side> boundary_tag(std::size_t edge) const;

    // Cells adjacent to an edge; second entry absent on the boundary.
    [[nodiscard]] std::array<std::optional<std::size_t>, 2> edge_cells(std::size_t edge) const;

    [[nodiscard]] Vec2 edge_midpoint(std::size_t edge) const;
    [[nodiscard]] double edge_length(std::size_t edge) const;
    [[nodiscard]] Vec2 edge_normal(std::size_t edge) const;
    [[nodiscard]] Vec2 centroid(std::size_t cell) const;

    /// Maximum cell diameter.
    [[nodiscard]] double mesh_size() const noexcept { return h_; }

    /// Index of a cell containing the point, or nullopt when outside the domain.
    [[nodiscard]] std::optional<std::size_t> locate(Vec2 point) const;

  private:
    void build_edges();
    void tag_boundary();

    Rect domain_;
    std::vector<Vec2> vertices_;
    std::vector<std::array<std::size_t, 3>> cells_;
    std::vector<std::array<std::size_t, 2>> edges_;
    std::vector<std::array<CellEdge, 3>> cell_edges_;
    std::vector<std::array<std::optional<std::size_t>, 2>> edge_cells_;
    std::map<std::size_t, Side> boundary_tags_;
    double h_ = 0.0;
};

/// Structured mesh: each of the nx*ny quads is split along its lower-left to
/// upper-right diagonal.
Mesh generate_rect_mesh(Vec2 origin, Vec2 extent, int nx, int ny);

CellGeometry cell_geometry(const Mesh& mesh, std::size_t cell);

/// Boundary edges on one side, in increasing edge index.
std::vector<std::size_t> boundary_edges(const Mesh& mesh, Side tag);

/// Plain-text dump: "V E F" header, vertex lines "x y", cell lines
/// "v0 v1 v2", edge lines "v0 v1 tag" with tag -1 for interior edges.
void write_mesh(std::ostream& out, const Mesh& mesh);

} // namespace porobiot
