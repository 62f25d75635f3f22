#pragma once

#include "porobiot/mesh.hpp"
#include "porobiot/sparse.hpp"

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace porobiot {

enum class SpaceKind { P1Vector, RT0, P0 };
const char* to_string(SpaceKind kind);

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Cell-to-global DOF numbering for one discrete space.
///
/// P1Vector: component c of vertex v is DOF 2v + c (six per cell).
/// RT0: one normal-flux DOF per edge, measured against the global edge normal.
/// P0: one DOF per cell.
class DofMap {
  public:
    DofMap(std::shared_ptr<const Mesh> mesh, SpaceKind kind);

    [[nodiscard]] SpaceKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t n_dofs() const noexcept { return n_dofs_; }
    [[nodiscard]] std::size_t dofs_per_cell() const noexcept { return per_cell_; }
    [[nodiscard]] std::span<const std::size_t> cell_dofs(std::size_t cell) const;
    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }

  private:
    std::shared_ptr<const Mesh> mesh_;
    SpaceKind kind_;
    std::size_t n_dofs_ = 0;
    std::size_t per_cell_ = 0;
    std::vector<std::size_t> dofs_;
};

struct FeFunction {
    std::shared_ptr<const DofMap> dofmap;
    Vector coeffs;

    FeFunction() = default;
    explicit FeFunction(std::shared_ptr<const DofMap> map);
    FeFunction(std::shared_ptr<const DofMap> map, Vector values);

    [[nodiscard]] SpaceKind kind() const { return dofmap->kind(); }
};

/// Barycentric points with weights summing to one; integrate as
/// |T| * sum_k w_k f(x_k).
struct QuadratureRule {
    int degree = 0;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
};

/// Rules exact to the requested degree; supported degrees 1, 2 and 4.
QuadratureRule quadrature(int degree);

Vec2 barycentric_to_cartesian(const Mesh& mesh, std::size_t cell, const std::array<double, 3>& lambda);

struct Rt0Value {
    Vec2 value;
    double divergence;
};

/// The three signed RT0 basis functions of a cell at a point, in local edge
/// order. Each has unit normal component against the global normal on its
/// own edge and zero normal component on the other two.
std::array<Rt0Value, 3> rt0_basis(const Mesh& mesh, std::size_t cell, Vec2 point);

struct P1VectorEval {
    Vec2 value;
    Mat2 gradient; // gradient[i][j] = d u_i / d x_j
    double divergence;
    Mat2 strain;
};

/// Evaluates a P1 vector field from its six local coefficients
/// (u_x, u_y per local vertex).
P1VectorEval p1_vector_eval(const Mesh& mesh, std::size_t cell, std::span<const double> local_coeffs, Vec2 point);
P1VectorEval p1_vector_eval(const Mesh& mesh, std::size_t cell, std::span<const double> local_coeffs);

// Point evaluation of discrete functions on a known cell.
double eval_p0(const FeFunction& f, std::size_t cell);
Vec2 eval_rt0(const FeFunction& f, std::size_t cell, Vec2 point);
P1VectorEval eval_p1_vector(const FeFunction& f, std::size_t cell, Vec2 point);

/// Cellwise divergence of an RT0 or P1 vector function.
Vector cell_divergence(const FeFunction& f);

/// L2 mass matrix of a space (for P1Vector it acts on both components).
SparseMatrix mass_matrix(const DofMap& map);

double l2_inner(const FeFunction& f, const FeFunction& g);
double l2_norm(const FeFunction& f);

using ScalarField = std::function<double(Vec2)>;
using VectorField = std::function<Vec2(Vec2)>;

/// Cell averages (degree-4 quadrature).
FeFunction interpolate_p0(std::shared_ptr<const DofMap> map, const ScalarField& field);
/// Nodal interpolation.
FeFunction interpolate_p1_vector(std::shared_ptr<const DofMap> map, const VectorField& field);
/// Edge-averaged normal components against the global normals.
FeFunction interpolate_rt0(std::shared_ptr<const DofMap> map, const VectorField& field);

} // namespace porobiot
