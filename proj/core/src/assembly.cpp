#include "porobiot/assembly.hpp"

#include "porobiot/errors.hpp"

#include <cmath>
#include <ostream>
#include <set>

namespace porobiot {

MechanicsOperators assemble_mechanics(const DofMap& p1v, const DofMap& p0, const MaterialModel& mat)
{
    const Mesh& mesh = p1v.mesh();
    std::vector<Triplet> ta, td, tb;
    ta.reserve(36 * mesh.num_cells());
    td.reserve(36 * mesh.num_cells());
    tb.reserve(6 * mesh.num_cells());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto geo = cell_geometry(mesh, c);
        const auto dofs = p1v.cell_dofs(c);
        const int cell_dof = static_cast<int>(p0.cell_dofs(c)[0]);
        // Basis (a, comp) = lambda_a e_comp; its divergence is grad(lambda_a)[comp].
        auto comp = [&](std::size_t a, std::size_t k) { return k == 0 ? geo.grad_lambda[a].x : geo.grad_lambda[a].y; };
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t ca = 0; ca < 2; ++ca) {
                const int row = static_cast<int>(dofs[2 * a + ca]);
                tb.emplace_back(row, cell_dof, geo.area * comp(a, ca));
                for (std::size_t b = 0; b < 3; ++b) {
                    for (std::size_t cb = 0; cb < 2; ++cb) {
                        const int col = static_cast<int>(dofs[2 * b + cb]);
                        // eps(phi_a,ca) : eps(phi_b,cb) = (delta g_a.g_b + g_a[cb] g_b[ca]) / 2
                        const double gg = ca == cb ? dot(geo.grad_lambda[a], geo.grad_lambda[b]) : 0.0;
                        const double cross = comp(a, cb) * comp(b, ca);
                        ta.emplace_back(row, col, mat.mu * geo.area * (gg + cross));
                        td.emplace_back(row, col, geo.area * comp(a, ca) * comp(b, cb));
                    }
                }
            }
        }
    }
    const auto n = p1v.n_dofs();
    return {from_triplets(n, n, ta), from_triplets(n, n, td), from_triplets(n, p0.n_dofs(), tb)};
}

FlowOperators assemble_flow(const DofMap& rt0, const DofMap& p0, const MaterialModel& mat)
{
    const Mesh& mesh = rt0.mesh();
    const auto rule = quadrature(2);
    std::vector<Triplet> tm, tb, tp;
    tm.reserve(9 * mesh.num_cells());
    tb.reserve(3 * mesh.num_cells());
    tp.reserve(mesh.num_cells());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto geo = cell_geometry(mesh, c);
        const auto dofs = rt0.cell_dofs(c);
        const int cell_dof = static_cast<int>(p0.cell_dofs(c)[0]);
        for (std::size_t k = 0; k < rule.points.size(); ++k) {
            const Vec2 x = barycentric_to_cartesian(mesh, c, rule.points[k]);
            const double perm = mat.permeability(x);
            if (!(perm > 0.0)) throw AssumptionError("permeability must be positive (found " + std::to_string(perm) + ")");
            const double w = geo.area * rule.weights[k] * mat.nu_f / perm;
            const auto phi = rt0_basis(mesh, c, x);
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t j = 0; j < 3; ++j) {
                    tm.emplace_back(static_cast<int>(dofs[i]), static_cast<int>(dofs[j]), w * dot(phi[i].value, phi[j].value));
                }
            }
        }
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& ce = mesh.cell_edges(c)[i];
            tb.emplace_back(cell_dof, static_cast<int>(dofs[i]), ce.sign * mesh.edge_length(ce.edge));
        }
        tp.emplace_back(cell_dof, cell_dof, geo.area);
    }
    return {from_triplets(rt0.n_dofs(), rt0.n_dofs(), tm), from_triplets(p0.n_dofs(), rt0.n_dofs(), tb),
            from_triplets(p0.n_dofs(), p0.n_dofs(), tp)};
}

NonlinearRhs assemble_nonlinear_rhs(const Vector& u, const Vector& p, const BiotOperators& ops, const MaterialModel& mat)
{
    const Vector areas = ops.M_p.diagonal();
    const Vector div = (ops.B_up.transpose() * u).cwiseQuotient(areas);
    NonlinearRhs out;
    out.bp.resize(p.size());
    Vector hdiv(div.size());
    for (Eigen::Index c = 0; c < p.size(); ++c) {
        if (!mat.b_law.admissible_range.contains(p[c])) ++out.out_of_range;
        if (!mat.h_law.admissible_range.contains(div[c])) ++out.out_of_range;
        out.bp[c] = mat.b_law(p[c]) * areas[c];
        hdiv[c] = mat.h_law(div[c]);
    }
    out.hu = ops.B_up * hdiv;
    return out;
}

FieldConstraints::FieldConstraints(std::size_t n_full) : state_(n_full, -1) {}

void FieldConstraints::fix(std::size_t dof)
{
    int& s = state_.at(dof);
    if (s >= 0) throw ConfigurationError("DOF " + std::to_string(dof) + " is both tied and fixed");
    s = -2;
}

void FieldConstraints::tie(std::size_t dof, std::size_t group)
{
    int& s = state_.at(dof);
    if (s == -2) throw ConfigurationError("DOF " + std::to_string(dof) + " is both fixed and tied");
    if (s >= 0 && s != static_cast<int>(group)) throw ConfigurationError("DOF " + std::to_string(dof) + " tied twice");
    s = static_cast<int>(group);
}

void FieldConstraints::finalize()
{
    reduced_.assign(state_.size(), -1);
    fixed_.clear();
    groups_.clear();
    std::map<int, std::size_t> group_slot;
    std::map<int, int> group_index;
    int next = 0;
    std::vector<Triplet> trip;
    for (std::size_t i = 0; i < state_.size(); ++i) {
        const int s = state_[i];
        if (s == -2) {
            fixed_.push_back(i);
            continue;
        }
        if (s == -1) {
            reduced_[i] = next++;
        } else {
            auto [it, inserted] = group_index.try_emplace(s, next);
            if (inserted) {
                ++next;
                group_slot[s] = groups_.size();
                groups_.emplace_back();
            }
            reduced_[i] = it->second;
            groups_[group_slot[s]].push_back(i);
        }
        trip.emplace_back(static_cast<int>(i), reduced_[i], 1.0);
    }
    n_reduced_ = static_cast<std::size_t>(next);
    t_ = from_triplets(state_.size(), n_reduced_, trip);
}

Vector FieldConstraints::restrict_dual(const Vector& full) const { return t_.transpose() * full; }

Vector FieldConstraints::expand(const Vector& reduced, const Vector& fixed_values) const
{
    Vector out = t_ * reduced;
    for (auto d : fixed_) out[static_cast<Eigen::Index>(d)] = fixed_values[static_cast<Eigen::Index>(d)];
    return out;
}

Vector FieldConstraints::reduce_primal(const Vector& full) const
{
    Vector out(static_cast<Eigen::Index>(n_reduced_));
    for (std::size_t i = 0; i < state_.size(); ++i) {
        if (reduced_[i] >= 0) out[reduced_[i]] = full[static_cast<Eigen::Index>(i)];
    }
    return out;
}

SparseMatrix reduce(const SparseMatrix& a, const FieldConstraints& rows, const FieldConstraints& cols)
{
    SparseMatrix r = rows.prolongation().transpose() * a * cols.prolongation();
    r.makeCompressed();
    return r;
}

namespace {

// Vertices on a side, ascending.
std::vector<std::size_t> side_vertices(const Mesh& mesh, Side side)
{
    std::set<std::size_t> verts;
    for (auto e : boundary_edges(mesh, side)) {
        verts.insert(mesh.edges()[e][0]);
        verts.insert(mesh.edges()[e][1]);
    }
    return {verts.begin(), verts.end()};
}

std::size_t normal_component(Side side) { return side == Side::Left || side == Side::Right ? 0 : 1; }

double outward_sign(Side side) { return side == Side::Left || side == Side::Bottom ? -1.0 : 1.0; }

int boundary_edge_sign(const Mesh& mesh, std::size_t edge)
{
    const auto cell = *mesh.edge_cells(edge)[0];
    for (const auto& ce : mesh.cell_edges(cell)) {
        if (ce.edge == edge) return ce.sign;
    }
    throw MeshError("edge not found in its cell");
}

template <class F>
double edge_average(const Mesh& mesh, std::size_t edge, F&& f)
{
    const double s = std::sqrt(0.6);
    const std::array<double, 3> nodes{0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)};
    const std::array<double, 3> weights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    const Vec2 a = mesh.vertices()[mesh.edges()[edge][0]];
    const Vec2 b = mesh.vertices()[mesh.edges()[edge][1]];
    double avg = 0.0;
    for (std::size_t k = 0; k < 3; ++k) avg += weights[k] * f(a + nodes[k] * (b - a));
    return avg;
}

} // namespace

Discretization discretize(std::shared_ptr<const Mesh> mesh, const MaterialModel& mat, const ProblemDefinition& problem)
{
    mat.validate();
    Discretization d;
    d.mesh = mesh;
    d.p1v = std::make_shared<DofMap>(mesh, SpaceKind::P1Vector);
    d.rt0 = std::make_shared<DofMap>(mesh, SpaceKind::RT0);
    d.p0 = std::make_shared<DofMap>(mesh, SpaceKind::P0);
    auto mech = assemble_mechanics(*d.p1v, *d.p0, mat);
    auto flow = assemble_flow(*d.rt0, *d.p0, mat);
    d.ops = BiotOperators{std::move(mech.A_e), std::move(mech.D),  std::move(mech.B_up),
                          std::move(flow.M_q), std::move(flow.B_qp), std::move(flow.M_p)};
    d.mass_u = mass_matrix(*d.p1v);
    d.mass_q = mass_matrix(*d.rt0);

    d.u_constraints = FieldConstraints(d.p1v->n_dofs());
    d.q_constraints = FieldConstraints(d.rt0->n_dofs());
    d.p_constraints = FieldConstraints(d.p0->n_dofs());
    for (Side side : kAllSides) {
        const auto& bc = problem.side(side);
        for (auto v : side_vertices(*mesh, side)) {
            if (bc.mechanics == MechanicsBcKind::Dirichlet) {
                d.u_constraints.fix(2 * v);
                d.u_constraints.fix(2 * v + 1);
            } else if (bc.mechanics == MechanicsBcKind::NormalDirichlet) {
                d.u_constraints.fix(2 * v + normal_component(side));
            }
        }
        if (bc.flow == FlowBcKind::Flux) {
            for (auto e : boundary_edges(*mesh, side)) d.q_constraints.fix(e);
        }
    }
    for (Side side : kAllSides) {
        if (problem.side(side).mechanics != MechanicsBcKind::TiedNormal) continue;
        for (auto v : side_vertices(*mesh, side)) {
            d.u_constraints.tie(2 * v + normal_component(side), static_cast<std::size_t>(side));
        }
    }
    d.u_constraints.finalize();
    d.q_constraints.finalize();
    d.p_constraints.finalize();
    return d;
}

EssentialValues essential_values(const Discretization& disc, const ProblemDefinition& problem, double t)
{
    const Mesh& mesh = *disc.mesh;
    EssentialValues out{Vector::Zero(static_cast<Eigen::Index>(disc.p1v->n_dofs())),
                        Vector::Zero(static_cast<Eigen::Index>(disc.rt0->n_dofs()))};
    for (Side side : kAllSides) {
        const auto& bc = problem.side(side);
        if (bc.mechanics == MechanicsBcKind::Dirichlet || bc.mechanics == MechanicsBcKind::NormalDirichlet) {
            for (auto v : side_vertices(mesh, side)) {
                const Vec2 val = bc.displacement(mesh.vertices()[v], t);
                for (std::size_t c = 0; c < 2; ++c) {
                    const auto dof = 2 * v + c;
                    if (disc.u_constraints.is_fixed(dof)) out.u[static_cast<Eigen::Index>(dof)] = c == 0 ? val.x : val.y;
                }
            }
        }
        if (bc.flow == FlowBcKind::Flux) {
            for (auto e : boundary_edges(mesh, side)) {
                const double flux = edge_average(mesh, e, [&](Vec2 x) { return bc.flow_value(x, t); });
                out.q[static_cast<Eigen::Index>(e)] = boundary_edge_sign(mesh, e) * flux;
            }
        }
    }
    return out;
}

Loads assemble_loads(const Discretization& disc, const ProblemDefinition& problem, const MaterialModel& mat, double t)
{
    const Mesh& mesh = *disc.mesh;
    Loads out{Vector::Zero(static_cast<Eigen::Index>(disc.p1v->n_dofs())),
              Vector::Zero(static_cast<Eigen::Index>(disc.rt0->n_dofs())),
              Vector::Zero(static_cast<Eigen::Index>(disc.p0->n_dofs()))};
    const auto rule4 = quadrature(4);
    const auto rule2 = quadrature(2);
    const Vec2 rho_g = mat.rho_f * mat.gravity;
    const bool gravity = rho_g.x != 0.0 || rho_g.y != 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto geo = cell_geometry(mesh, c);
        const auto udofs = disc.p1v->cell_dofs(c);
        for (std::size_t k = 0; k < rule4.points.size(); ++k) {
            const auto& lam = rule4.points[k];
            const Vec2 x = barycentric_to_cartesian(mesh, c, lam);
            const double w = geo.area * rule4.weights[k];
            const Vec2 f = problem.body_force(x, t);
            for (std::size_t a = 0; a < 3; ++a) {
                out.f[static_cast<Eigen::Index>(udofs[2 * a])] += w * f.x * lam[a];
                out.f[static_cast<Eigen::Index>(udofs[2 * a + 1])] += w * f.y * lam[a];
            }
            out.s[static_cast<Eigen::Index>(c)] += w * problem.source(x, t);
        }
        if (gravity) {
            const auto qdofs = disc.rt0->cell_dofs(c);
            for (std::size_t k = 0; k < rule2.points.size(); ++k) {
                const Vec2 x = barycentric_to_cartesian(mesh, c, rule2.points[k]);
                const auto phi = rt0_basis(mesh, c, x);
                for (std::size_t i = 0; i < 3; ++i) {
                    out.g[static_cast<Eigen::Index>(qdofs[i])] += geo.area * rule2.weights[k] * dot(rho_g, phi[i].value);
                }
            }
        }
    }
    for (Side side : kAllSides) {
        const auto& bc = problem.side(side);
        if (bc.flow == FlowBcKind::Pressure) {
            // -int_e p_bar v.n_out, with v.n_global = 1 on the DOF's own edge
            for (auto e : boundary_edges(mesh, side)) {
                const double avg = edge_average(mesh, e, [&](Vec2 x) { return bc.flow_value(x, t); });
                out.g[static_cast<Eigen::Index>(e)] -= boundary_edge_sign(mesh, e) * avg * mesh.edge_length(e);
            }
        }
        if (bc.mechanics == MechanicsBcKind::TiedNormal && bc.tied_load != 0.0) {
            // The reduced equation sums over the tied group, so one member carries the total.
            const auto verts = side_vertices(mesh, side);
            if (!verts.empty()) {
                out.f[static_cast<Eigen::Index>(2 * verts.front() + normal_component(side))] += outward_sign(side) * bc.tied_load;
            }
        }
    }
    return out;
}

BlockSystem apply_essential_bc(const std::vector<std::vector<const SparseMatrix*>>& blocks,
                               const std::vector<Vector>& rhs,
                               const std::vector<const FieldConstraints*>& constraints,
                               const std::vector<Vector>& fixed_values)
{
    const std::size_t nb = constraints.size();
    if (blocks.size() != nb || rhs.size() != nb || fixed_values.size() != nb) {
        throw InputError("apply_essential_bc: inconsistent block counts");
    }
    std::vector<std::size_t> sizes;
    for (const auto* c : constraints) sizes.push_back(c->n_reduced());
    BlockSystem sys;
    sys.layout = BlockLayout(sizes);
    std::vector<SparseMatrix> reduced(nb * nb);
    std::vector<std::vector<const SparseMatrix*>> grid(nb, std::vector<const SparseMatrix*>(nb, nullptr));
    sys.rhs = Vector::Zero(static_cast<Eigen::Index>(sys.layout.total()));
    for (std::size_t i = 0; i < nb; ++i) {
        Vector lifted = rhs[i];
        for (std::size_t j = 0; j < nb; ++j) {
            const SparseMatrix* a = blocks[i][j];
            if (!a) continue;
            lifted -= (*a) * fixed_values[j];
            reduced[i * nb + j] = reduce(*a, *constraints[i], *constraints[j]);
            grid[i][j] = &reduced[i * nb + j];
        }
        sys.slice(sys.rhs, i) = constraints[i]->restrict_dual(lifted);
    }
    sys.matrix = assemble_blocks(sys.layout, grid);
    return sys;
}

void write_operator(std::ostream& out, const SparseMatrix& a) { write_coo(out, a); }

} // namespace porobiot
