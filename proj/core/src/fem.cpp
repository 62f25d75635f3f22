#include "porobiot/fem.hpp"

#include "porobiot/errors.hpp"

#include <cmath>
#include <string>

namespace porobiot {

const char* to_string(SpaceKind kind)
{
    switch (kind) {
    case SpaceKind::P1Vector: return "P1Vector";
    case SpaceKind::RT0: return "RT0";
    case SpaceKind::P0: return "P0";
    }
    return "?";
}

DofMap::DofMap(std::shared_ptr<const Mesh> mesh, SpaceKind kind) : mesh_(std::move(mesh)), kind_(kind)
{
    const auto nc = mesh_->num_cells();
    switch (kind_) {
    case SpaceKind::P1Vector:
        n_dofs_ = 2 * mesh_->num_vertices();
        per_cell_ = 6;
        dofs_.reserve(6 * nc);
        for (const auto& cell : mesh_->cells()) {
            for (auto v : cell) {
                dofs_.push_back(2 * v);
                dofs_.push_back(2 * v + 1);
            }
        }
        break;
    case SpaceKind::RT0:
        n_dofs_ = mesh_->num_edges();
        per_cell_ = 3;
        dofs_.reserve(3 * nc);
        for (std::size_t c = 0; c < nc; ++c) {
            for (const auto& ce : mesh_->cell_edges(c)) dofs_.push_back(ce.edge);
        }
        break;
    case SpaceKind::P0:
        n_dofs_ = nc;
        per_cell_ = 1;
        dofs_.resize(nc);
        for (std::size_t c = 0; c < nc; ++c) dofs_[c] = c;
        break;
    }
}

std::span<const std::size_t> DofMap::cell_dofs(std::size_t cell) const
{
    return {dofs_.data() + cell * per_cell_, per_cell_};
}

FeFunction::FeFunction(std::shared_ptr<const DofMap> map)
    : dofmap(std::move(map)), coeffs(Vector::Zero(static_cast<Eigen::Index>(dofmap->n_dofs())))
{
}

FeFunction::FeFunction(std::shared_ptr<const DofMap> map, Vector values) : dofmap(std::move(map)), coeffs(std::move(values))
{
    if (static_cast<std::size_t>(coeffs.size()) != dofmap->n_dofs()) {
        throw InputError("coefficient count does not match the DOF map");
    }
}

QuadratureRule quadrature(int degree)
{
    QuadratureRule q;
    switch (degree) {
    case 1:
        q.degree = 1;
        q.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        q.weights = {1.0};
        return q;
    case 2: {
        q.degree = 2;
        const double a = 1.0 / 6.0, b = 2.0 / 3.0;
        q.points = {{b, a, a}, {a, b, a}, {a, a, b}};
        q.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        return q;
    }
    case 4: {
        // Dunavant's six-point rule.
        q.degree = 4;
        const double a1 = 0.44594849091596488631832925388305, w1 = 0.22338158967801146569500700843312;
        const double a2 = 0.09157621350977074345957146340220, w2 = 0.10995174365532186763832632490021;
        const double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
        q.points = {{b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1}, {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
        q.weights = {w1, w1, w1, w2, w2, w2};
        return q;
    }
    default:
        throw InputError("unsupported quadrature degree " + std::to_string(degree));
    }
}

Vec2 barycentric_to_cartesian(const Mesh& mesh, std::size_t cell, const std::array<double, 3>& lambda)
{
    const auto& t = mesh.cells()[cell];
    const auto& v = mesh.vertices();
    return lambda[0] * v[t[0]] + lambda[1] * v[t[1]] + lambda[2] * v[t[2]];
}

namespace {

void require_inside(const Mesh& mesh, std::size_t cell, const CellGeometry& g, Vec2 point)
{
    const auto& t = mesh.cells()[cell];
    const Vec2 p0 = mesh.vertices()[t[0]];
    double sum = 0.0;
    for (int i = 1; i < 3; ++i) {
        const Vec2 vi = mesh.vertices()[t[static_cast<std::size_t>(i)]];
        // lambda_i(x) = 1 + grad(lambda_i).(x - v_i)
        const double li = 1.0 + dot(g.grad_lambda[static_cast<std::size_t>(i)], point - vi);
        if (li < -1e-10) throw DomainError("point outside cell " + std::to_string(cell));
        sum += li;
    }
    const double l0 = 1.0 + dot(g.grad_lambda[0], point - p0);
    if (l0 < -1e-10 || std::abs(l0 + sum - 1.0) > 1e-8) throw DomainError("point outside cell " + std::to_string(cell));
}

} // namespace

std::array<Rt0Value, 3> rt0_basis(const Mesh& mesh, std::size_t cell, Vec2 point)
{
    const auto g = cell_geometry(mesh, cell);
    require_inside(mesh, cell, g, point);
    const auto& t = mesh.cells()[cell];
    std::array<Rt0Value, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& ce = mesh.cell_edges(cell)[i];
        const double scale = ce.sign * mesh.edge_length(ce.edge) / (2.0 * g.area);
        out[i].value = scale * (point - mesh.vertices()[t[i]]);
        out[i].divergence = 2.0 * scale;
    }
    return out;
}

P1VectorEval p1_vector_eval(const Mesh& mesh, std::size_t cell, std::span<const double> local_coeffs, Vec2 point)
{
    const auto g = cell_geometry(mesh, cell);
    const auto& t = mesh.cells()[cell];
    P1VectorEval e{};
    for (std::size_t a = 0; a < 3; ++a) {
        const double lambda = 1.0 + dot(g.grad_lambda[a], point - mesh.vertices()[t[a]]);
        for (std::size_t c = 0; c < 2; ++c) {
            const double u = local_coeffs[2 * a + c];
            (c == 0 ? e.value.x : e.value.y) += u * lambda;
            e.gradient[c][0] += u * g.grad_lambda[a].x;
            e.gradient[c][1] += u * g.grad_lambda[a].y;
        }
    }
    e.divergence = e.gradient[0][0] + e.gradient[1][1];
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) e.strain[i][j] = 0.5 * (e.gradient[i][j] + e.gradient[j][i]);
    }
    return e;
}

P1VectorEval p1_vector_eval(const Mesh& mesh, std::size_t cell, std::span<const double> local_coeffs)
{
    return p1_vector_eval(mesh, cell, local_coeffs, mesh.centroid(cell));
}

double eval_p0(const FeFunction& f, std::size_t cell)
{
    return f.coeffs[static_cast<Eigen::Index>(cell)];
}

Vec2 eval_rt0(const FeFunction& f, std::size_t cell, Vec2 point)
{
    const auto basis = rt0_basis(f.dofmap->mesh(), cell, point);
    const auto dofs = f.dofmap->cell_dofs(cell);
    Vec2 v{};
    for (std::size_t i = 0; i < 3; ++i) v = v + f.coeffs[static_cast<Eigen::Index>(dofs[i])] * basis[i].value;
    return v;
}

P1VectorEval eval_p1_vector(const FeFunction& f, std::size_t cell, Vec2 point)
{
    const auto dofs = f.dofmap->cell_dofs(cell);
    std::array<double, 6> local{};
    for (std::size_t k = 0; k < 6; ++k) local[k] = f.coeffs[static_cast<Eigen::Index>(dofs[k])];
    return p1_vector_eval(f.dofmap->mesh(), cell, local, point);
}

Vector cell_divergence(const FeFunction& f)
{
    const Mesh& mesh = f.dofmap->mesh();
    Vector div(static_cast<Eigen::Index>(mesh.num_cells()));
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto dofs = f.dofmap->cell_dofs(c);
        const auto g = cell_geometry(mesh, c);
        double d = 0.0;
        if (f.kind() == SpaceKind::RT0) {
            for (std::size_t i = 0; i < 3; ++i) {
                const auto& ce = mesh.cell_edges(c)[i];
                d += ce.sign * mesh.edge_length(ce.edge) * f.coeffs[static_cast<Eigen::Index>(dofs[i])];
            }
            d /= g.area;
        } else if (f.kind() == SpaceKind::P1Vector) {
            for (std::size_t a = 0; a < 3; ++a) {
                d += f.coeffs[static_cast<Eigen::Index>(dofs[2 * a])] * g.grad_lambda[a].x +
                     f.coeffs[static_cast<Eigen::Index>(dofs[2 * a + 1])] * g.grad_lambda[a].y;
            }
        } else {
            throw InputError("divergence requires a vector space");
        }
        div[static_cast<Eigen::Index>(c)] = d;
    }
    return div;
}

SparseMatrix mass_matrix(const DofMap& map)
{
    const Mesh& mesh = map.mesh();
    std::vector<Triplet> trip;
    trip.reserve(mesh.num_cells() * map.dofs_per_cell() * map.dofs_per_cell());
    const auto rule = quadrature(2);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto g = cell_geometry(mesh, c);
        const auto dofs = map.cell_dofs(c);
        switch (map.kind()) {
        case SpaceKind::P0:
            trip.emplace_back(static_cast<int>(dofs[0]), static_cast<int>(dofs[0]), g.area);
            break;
        case SpaceKind::P1Vector:
            // int lambda_a lambda_b = |T| (1 + delta_ab) / 12
            for (std::size_t a = 0; a < 3; ++a) {
                for (std::size_t b = 0; b < 3; ++b) {
                    const double m = g.area * (a == b ? 2.0 : 1.0) / 12.0;
                    for (std::size_t comp = 0; comp < 2; ++comp) {
                        trip.emplace_back(static_cast<int>(dofs[2 * a + comp]), static_cast<int>(dofs[2 * b + comp]), m);
                    }
                }
            }
            break;
        case SpaceKind::RT0:
            for (std::size_t k = 0; k < rule.points.size(); ++k) {
                const Vec2 x = barycentric_to_cartesian(mesh, c, rule.points[k]);
                const auto phi = rt0_basis(mesh, c, x);
                for (std::size_t i = 0; i < 3; ++i) {
                    for (std::size_t j = 0; j < 3; ++j) {
                        trip.emplace_back(static_cast<int>(dofs[i]), static_cast<int>(dofs[j]),
                                          g.area * rule.weights[k] * dot(phi[i].value, phi[j].value));
                    }
                }
            }
            break;
        }
    }
    return from_triplets(map.n_dofs(), map.n_dofs(), trip);
}

double l2_inner(const FeFunction& f, const FeFunction& g)
{
    if (f.dofmap != g.dofmap && (f.kind() != g.kind() || &f.dofmap->mesh() != &g.dofmap->mesh())) {
        throw InputError("l2_inner: functions live in different spaces");
    }
    return f.coeffs.dot(mass_matrix(*f.dofmap) * g.coeffs);
}

double l2_norm(const FeFunction& f)
{
    return std::sqrt(std::max(0.0, l2_inner(f, f)));
}

FeFunction interpolate_p0(std::shared_ptr<const DofMap> map, const ScalarField& field)
{
    FeFunction f(std::move(map));
    const Mesh& mesh = f.dofmap->mesh();
    const auto rule = quadrature(4);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        double avg = 0.0;
        for (std::size_t k = 0; k < rule.points.size(); ++k) {
            avg += rule.weights[k] * field(barycentric_to_cartesian(mesh, c, rule.points[k]));
        }
        f.coeffs[static_cast<Eigen::Index>(c)] = avg;
    }
    return f;
}

FeFunction interpolate_p1_vector(std::shared_ptr<const DofMap> map, const VectorField& field)
{
    FeFunction f(std::move(map));
    const Mesh& mesh = f.dofmap->mesh();
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const Vec2 val = field(mesh.vertices()[v]);
        f.coeffs[static_cast<Eigen::Index>(2 * v)] = val.x;
        f.coeffs[static_cast<Eigen::Index>(2 * v + 1)] = val.y;
    }
    return f;
}

FeFunction interpolate_rt0(std::shared_ptr<const DofMap> map, const VectorField& field)
{
    FeFunction f(std::move(map));
    const Mesh& mesh = f.dofmap->mesh();
    // Three-point Gauss-Legendre on [0, 1].
    const double s = std::sqrt(0.6);
    const std::array<double, 3> nodes{0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)};
    const std::array<double, 3> weights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Vec2 a = mesh.vertices()[mesh.edges()[e][0]];
        const Vec2 b = mesh.vertices()[mesh.edges()[e][1]];
        const Vec2 n = mesh.edge_normal(e);
        double avg = 0.0;
        for (std::size_t k = 0; k < 3; ++k) avg += weights[k] * dot(field(a + nodes[k] * (b - a)), n);
        f.coeffs[static_cast<Eigen::Index>(e)] = avg;
    }
    return f;
}

} // namespace porobiot
