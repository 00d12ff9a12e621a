#include "illumopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace illumopt {

namespace {

// Vertex paths of the Kuhn decomposition: each permutation of the three axes
// walks from corner 000 to corner 111 one axis at a time.
constexpr std::array<std::array<int, 3>, 6> kAxisOrders{{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

Index cells_along(double length, double spacing, const char* axis) {
    const double ratio = length / spacing;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw Error(fmt::format("dimension {} = {} mm is not a positive multiple of spacing {} mm",
                                axis, length, spacing));
    }
    return static_cast<Index>(rounded);
}

}  // namespace

const char* face_name(Face f) {
    switch (f) {
        case Face::XMin: return "x-";
        case Face::XMax: return "x+";
        case Face::YMin: return "y-";
        case Face::YMax: return "y+";
        case Face::Bottom: return "bottom";
        case Face::Top: return "top";
    }
    return "?";
}

double signed_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

std::array<Index, 3> MeshGrid::grid_index(Index id) const {
    const Index nz = cells[2] + 1;
    const Index ny = cells[1] + 1;
    return {id / (ny * nz), (id / nz) % ny, id % nz};
}

std::vector<Index> MeshGrid::surface_nodes() const {
    std::vector<Index> out;
    for (Index i = 0; i < num_nodes(); ++i)
        if (node_class[static_cast<std::size_t>(i)] == NodeClass::Surface) out.push_back(i);
    return out;
}

std::vector<Index> MeshGrid::allowed_nodes() const {
    std::vector<Index> out;
    for (Index i = 0; i < num_nodes(); ++i)
        if (illum_allowed[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
}

Index MeshGrid::nearest_top_node(double x, double y) const {
    auto snap = [&](double v, Index n) {
        const auto idx = static_cast<Index>(std::llround(v / spacing));
        return std::clamp<Index>(idx, 0, n);
    };
    return node_id(snap(x, cells[0]), snap(y, cells[1]), cells[2]);
}

MeshGrid build_grid(const std::array<double, 3>& dims, double spacing) {
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw Error(fmt::format("mesh spacing must be positive, got {}", spacing));
    for (double d : dims)
        if (!(d > 0.0) || !std::isfinite(d))
            throw Error(fmt::format("phantom dimensions must be positive, got {}", d));

    MeshGrid mesh;
    mesh.dims = dims;
    mesh.spacing = spacing;
    mesh.cells = {cells_along(dims[0], spacing, "x"), cells_along(dims[1], spacing, "y"),
                  cells_along(dims[2], spacing, "z")};
    const auto [nx, ny, nz] = mesh.cells;

    mesh.nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1) * (nz + 1)));
    for (Index i = 0; i <= nx; ++i)
        for (Index j = 0; j <= ny; ++j)
            for (Index k = 0; k <= nz; ++k)
                mesh.nodes.emplace_back(i * spacing, j * spacing, k * spacing);

    mesh.tets.reserve(static_cast<std::size_t>(6 * nx * ny * nz));
    for (Index i = 0; i < nx; ++i) {
        for (Index j = 0; j < ny; ++j) {
            for (Index k = 0; k < nz; ++k) {
                for (const auto& order : kAxisOrders) {
                    std::array<Index, 3> at{i, j, k};
                    std::array<Index, 4> tet{};
                    tet[0] = mesh.node_id(at[0], at[1], at[2]);
                    for (int step = 0; step < 3; ++step) {
                        ++at[static_cast<std::size_t>(order[static_cast<std::size_t>(step)])];
                        tet[static_cast<std::size_t>(step + 1)] = mesh.node_id(at[0], at[1], at[2]);
                    }
                    const auto& p = mesh.nodes;
                    const double v = signed_volume(p[tet[0]], p[tet[1]], p[tet[2]], p[tet[3]]);
                    if (v < 0.0) std::swap(tet[2], tet[3]);
                    mesh.tets.push_back(tet);
                }
            }
        }
    }

    // A tet face is on the boundary iff its three vertices share a boundary plane.
    constexpr std::array<std::array<int, 3>, 4> kFaces{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
    for (Index t = 0; t < mesh.num_tets(); ++t) {
        const auto& tet = mesh.tets[static_cast<std::size_t>(t)];
        for (const auto& f : kFaces) {
            std::array<Index, 3> tri{tet[static_cast<std::size_t>(f[0])], tet[static_cast<std::size_t>(f[1])],
                                     tet[static_cast<std::size_t>(f[2])]};
            const auto g0 = mesh.grid_index(tri[0]);
            const auto g1 = mesh.grid_index(tri[1]);
            const auto g2 = mesh.grid_index(tri[2]);
            for (int axis = 0; axis < 3; ++axis) {
                const auto a = static_cast<std::size_t>(axis);
                for (Index bound : {Index{0}, mesh.cells[a]}) {
                    if (g0[a] == bound && g1[a] == bound && g2[a] == bound) {
                        const bool upper = bound != 0;
                        Face face = axis == 0   ? (upper ? Face::XMax : Face::XMin)
                                    : axis == 1 ? (upper ? Face::YMax : Face::YMin)
                                                : (upper ? Face::Top : Face::Bottom);
                        mesh.surface_tris.push_back({tri, face, t});
                    }
                }
            }
        }
    }
    return mesh;
}

MeshGrid classify_nodes(MeshGrid mesh) {
    const auto n = static_cast<std::size_t>(mesh.num_nodes());
    mesh.node_class.assign(n, NodeClass::Interior);
    mesh.illum_allowed.assign(n, 0);
    for (Index id = 0; id < mesh.num_nodes(); ++id) {
        const auto g = mesh.grid_index(id);
        bool surface = false;
        for (std::size_t a = 0; a < 3; ++a) surface = surface || g[a] == 0 || g[a] == mesh.cells[a];
        const auto s = static_cast<std::size_t>(id);
        mesh.node_class[s] = surface ? NodeClass::Surface : NodeClass::Interior;
        mesh.illum_allowed[s] = g[2] == mesh.cells[2] ? 1 : 0;
    }
    return mesh;
}

MeshGrid make_mesh(const std::array<double, 3>& dims, double spacing) {
    return classify_nodes(build_grid(dims, spacing));
}

ElementGeometry tet_geometry(const std::array<Point3, 4>& v) {
    Eigen::Matrix3d jac;
    jac.col(0) = v[1] - v[0];
    jac.col(1) = v[2] - v[0];
    jac.col(2) = v[3] - v[0];
    const double det = jac.determinant();
    const double scale = std::max({jac.col(0).norm(), jac.col(1).norm(), jac.col(2).norm()});
    if (!(std::abs(det) > 1e-12 * scale * scale * scale))
        throw Error(fmt::format("degenerate tetrahedron (det = {})", det));

    // Rows of J^{-1} are the gradients of barycentric coordinates 1..3.
    const Eigen::Matrix3d inv = jac.inverse();
    ElementGeometry geo;
    geo.volume = std::abs(det) / 6.0;
    geo.grads[1] = inv.row(0).transpose();
    geo.grads[2] = inv.row(1).transpose();
    geo.grads[3] = inv.row(2).transpose();
    geo.grads[0] = -(geo.grads[1] + geo.grads[2] + geo.grads[3]);
    return geo;
}

ElementGeometry element_geometry(const MeshGrid& mesh, Index tet) {
    if (tet < 0 || tet >= mesh.num_tets())
        throw Error(fmt::format("tet index {} out of range [0, {})", tet, mesh.num_tets()));
    const auto& t = mesh.tets[static_cast<std::size_t>(tet)];
    return tet_geometry({mesh.nodes[static_cast<std::size_t>(t[0])], mesh.nodes[static_cast<std::size_t>(t[1])],
                         mesh.nodes[static_cast<std::size_t>(t[2])], mesh.nodes[static_cast<std::size_t>(t[3])]});
}

std::array<double, 4> barycentric(const MeshGrid& mesh, Index tet, const Point3& p) {
    const auto geo = element_geometry(mesh, tet);
    const auto& t = mesh.tets[static_cast<std::size_t>(tet)];
    const Point3& v0 = mesh.nodes[static_cast<std::size_t>(t[0])];
    std::array<double, 4> lam{};
    lam[0] = 1.0 + geo.grads[0].dot(p - v0);
    for (std::size_t a = 1; a < 4; ++a) lam[a] = geo.grads[a].dot(p - v0);
    return lam;
}

}  // namespace illumopt
