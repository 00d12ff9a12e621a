#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "illumopt/mesh.hpp"
#include "oracles.hpp"

using namespace illumopt;

TEST_CASE("grid counts match the brute-force enumerator") {
    struct Case {
        std::array<double, 3> dims;
        double h;
    };
    for (const Case& c : {Case{{15, 15, 15}, 1.0}, Case{{1, 1, 1}, 1.0}, Case{{2, 1, 1}, 1.0}, Case{{3, 2, 4}, 0.5}}) {
        const MeshGrid m = make_mesh(c.dims, c.h);
        const auto ref = oracle::enumerate_grid(m.cells[0], m.cells[1], m.cells[2]);
        CHECK(m.num_nodes() == ref.nodes);
        CHECK(m.num_tets() == ref.tets);
        CHECK(static_cast<Index>(m.surface_nodes().size()) == ref.surface);
        CHECK(static_cast<Index>(m.allowed_nodes().size()) == ref.top);
    }
}

TEST_CASE("reference phantom sizes") {
    const MeshGrid m = make_mesh({15, 15, 15}, 1.0);
    CHECK(m.num_nodes() == 4096);
    CHECK(m.num_tets() == 20250);
    CHECK(m.surface_nodes().size() == 1352);
    CHECK(m.allowed_nodes().size() == 256);

    const MeshGrid one = make_mesh({1, 1, 1}, 1.0);
    CHECK(one.num_nodes() == 8);
    CHECK(one.num_tets() == 6);
    CHECK(one.surface_nodes().size() == 8);
    CHECK(one.allowed_nodes().size() == 4);

    const MeshGrid two = make_mesh({2, 1, 1}, 1.0);
    CHECK(two.num_nodes() == 12);
    CHECK(two.num_tets() == 12);
}

TEST_CASE("tets are positive and fill the box") {
    for (double h : {1.0, 0.5}) {
        const MeshGrid m = make_mesh({3, 2, 5}, h);
        double total = 0;
        for (Index t = 0; t < m.num_tets(); ++t) {
            const auto& v = m.tets[t];
            const double vol = signed_volume(m.nodes[v[0]], m.nodes[v[1]], m.nodes[v[2]], m.nodes[v[3]]);
            REQUIRE(vol > 0);
            total += vol;
        }
        CHECK(std::abs(total - m.volume()) / m.volume() < 1e-12);
    }
}

TEST_CASE("surface triangles are boundary faces of their tet") {
    const MeshGrid m = make_mesh({3, 2, 2}, 1.0);
    // Each voxel face on the boundary is split into two triangles.
    const Index expected = 2 * 2 * (3 * 2 + 3 * 2 + 2 * 2);
    CHECK(static_cast<Index>(m.surface_tris.size()) == expected);
    std::set<std::array<Index, 3>> seen;
    for (const auto& tri : m.surface_tris) {
        auto key = tri.nodes;
        std::sort(key.begin(), key.end());
        CHECK(seen.insert(key).second);
        const auto& tet = m.tets[tri.tet];
        for (Index n : tri.nodes) CHECK(std::find(tet.begin(), tet.end(), n) != tet.end());
        int axis = tri.face == Face::XMin || tri.face == Face::XMax   ? 0
                   : tri.face == Face::YMin || tri.face == Face::YMax ? 1
                                                                        : 2;
        const bool upper = tri.face == Face::XMax || tri.face == Face::YMax || tri.face == Face::Top;
        for (Index n : tri.nodes) CHECK(m.nodes[n][axis] == doctest::Approx(upper ? m.dims[axis] : 0.0));
        CHECK(triangle_area(m.nodes[tri.nodes[0]], m.nodes[tri.nodes[1]], m.nodes[tri.nodes[2]]) ==
              doctest::Approx(0.5));
    }
    for (Index i : m.allowed_nodes()) CHECK(m.node_class[i] == NodeClass::Surface);
}

TEST_CASE("node ordering is lexicographic with z fastest") {
    const MeshGrid m = make_mesh({2, 3, 4}, 1.0);
    Index id = 0;
    for (Index i = 0; i <= 2; ++i)
        for (Index j = 0; j <= 3; ++j)
            for (Index k = 0; k <= 4; ++k, ++id) {
                CHECK(m.node_id(i, j, k) == id);
                CHECK(m.nodes[id] == Point3(i, j, k));
                CHECK(m.grid_index(id) == std::array<Index, 3>{i, j, k});
            }
}

TEST_CASE("build_grid rejects bad input") {
    CHECK_THROWS_AS(build_grid({1, 1, 1}, 0.0), Error);
    CHECK_THROWS_AS(build_grid({1, 1, 1}, -1.0), Error);
    CHECK_THROWS_AS(build_grid({1.5, 1, 1}, 1.0), Error);
    CHECK_THROWS_AS(build_grid({0, 1, 1}, 1.0), Error);
}

TEST_CASE("reference tet geometry") {
    const std::array<Point3, 4> v{Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(0, 0, 1)};
    const auto g = tet_geometry(v);
    CHECK(g.volume == doctest::Approx(1.0 / 6.0));
    CHECK((g.grads[0] - Point3(-1, -1, -1)).norm() < 1e-15);
    CHECK((g.grads[1] - Point3(1, 0, 0)).norm() < 1e-15);
    const std::array<Point3, 4> flat{Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(1, 1, 0)};
    CHECK_THROWS_AS(tet_geometry(flat), Error);
}

TEST_CASE("gradients sum to zero and barycentrics partition unity") {
    const MeshGrid m = make_mesh({2, 2, 2}, 0.5);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    CHECK_THROWS_AS(element_geometry(m, m.num_tets()), Error);
    for (Index t = 0; t < m.num_tets(); t += 7) {
        const auto g = element_geometry(m, t);
        CHECK((g.grads[0] + g.grads[1] + g.grads[2] + g.grads[3]).norm() < 1e-14);
        const auto& tv = m.tets[t];
        // Random interior point as a convex combination.
        double w[4], s = 0;
        for (double& x : w) s += (x = u(rng) + 0.01);
        Point3 p = Point3::Zero();
        for (int a = 0; a < 4; ++a) p += (w[a] / s) * m.nodes[tv[a]];
        const auto lam = barycentric(m, t, p);
        const auto ref = oracle::bary({m.nodes[tv[0]], m.nodes[tv[1]], m.nodes[tv[2]], m.nodes[tv[3]]}, p);
        CHECK(lam[0] + lam[1] + lam[2] + lam[3] == doctest::Approx(1.0).epsilon(1e-14));
        for (int a = 0; a < 4; ++a) CHECK(lam[a] == doctest::Approx(ref[a]).epsilon(1e-12));
    }
}

TEST_CASE("mesh construction is deterministic") {
    const MeshGrid a = make_mesh({4, 3, 2}, 1.0), b = make_mesh({4, 3, 2}, 1.0);
    CHECK(a.tets == b.tets);
    CHECK(a.nodes == b.nodes);
    CHECK(a.surface_tris.size() == b.surface_tris.size());
    CHECK(a.illum_allowed == b.illum_allowed);
}
