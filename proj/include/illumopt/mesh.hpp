#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "illumopt/types.hpp"

namespace illumopt {

enum class Face : std::uint8_t { XMin, XMax, YMin, YMax, Bottom, Top };
enum class NodeClass : std::uint8_t { Interior, Surface };

const char* face_name(Face f);

struct SurfaceTri {
    std::array<Index, 3> nodes;
    Face face;
    Index tet;  // owning tetrahedron
};

// Regular-grid tetrahedral mesh of an axis-aligned box with one corner at the origin.
// Node ids are lexicographic in (x, y, z): z varies fastest.
struct MeshGrid {
    std::array<double, 3> dims{};   // mm
    std::array<Index, 3> cells{};   // voxels per axis
    double spacing = 0.0;           // mm
    std::vector<Point3> nodes;
    std::vector<std::array<Index, 4>> tets;
    std::vector<SurfaceTri> surface_tris;
    std::vector<NodeClass> node_class;        // empty until classify_nodes
    std::vector<std::uint8_t> illum_allowed;  // empty until classify_nodes

    Index num_nodes() const { return static_cast<Index>(nodes.size()); }
    Index num_tets() const { return static_cast<Index>(tets.size()); }
    bool classified() const { return node_class.size() == nodes.size(); }

    Index node_id(Index i, Index j, Index k) const {
        return (i * (cells[1] + 1) + j) * (cells[2] + 1) + k;
    }
    std::array<Index, 3> grid_index(Index id) const;
    double volume() const { return dims[0] * dims[1] * dims[2]; }

    std::vector<Index> surface_nodes() const;
    std::vector<Index> allowed_nodes() const;
    // Nearest node on the top face to (x, y).
    Index nearest_top_node(double x, double y) const;
};

struct ElementGeometry {
    double volume = 0.0;
    std::array<Point3, 4> grads;  // gradients of the barycentric basis functions
};

// Builds the node lattice and the 6-tet Kuhn split of every voxel.
MeshGrid build_grid(const std::array<double, 3>& dims, double spacing);

// Fills node_class and illum_allowed (top face only).
MeshGrid classify_nodes(MeshGrid mesh);

// build_grid followed by classify_nodes.
MeshGrid make_mesh(const std::array<double, 3>& dims, double spacing);

ElementGeometry element_geometry(const MeshGrid& mesh, Index tet);
ElementGeometry tet_geometry(const std::array<Point3, 4>& v);

// Barycentric coordinates of p with respect to tetrahedron `tet`.
std::array<double, 4> barycentric(const MeshGrid& mesh, Index tet, const Point3& p);

double signed_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d);
double triangle_area(const Point3& a, const Point3& b, const Point3& c);

}  // namespace illumopt
