#pragma once

#include <cstdint>
#include <vector>

#include "illumopt/fem.hpp"
#include "illumopt/kernels.hpp"
#include "illumopt/mesh.hpp"

namespace illumopt {

// Planar pixel array parallel to the top face, facing down.
struct DetectorPlane {
    Index rows = 30;
    Index cols = 60;
    double pitch = 1.0;            // mm
    double height = 10.0;          // mm above the top face
    double acceptance_deg = 45.0;  // half-angle of each pixel's acceptance cone
    double center_x = 0.0;         // mm, plane centre
    double center_y = 0.0;

    Index num_pixels() const { return rows * cols; }
    // Pixel k = r * cols + c; plane at z = top_z + height.
    std::vector<Point3> pixel_centers(double top_z) const;
};

// Default 60 x 30 plane centred over the mesh top face.
DetectorPlane centered_detector(const MeshGrid& mesh, Index rows = 30, Index cols = 60, double pitch = 1.0,
                                double height = 10.0);

// Free-space transport from top-face nodes to pixels.
struct TransportMatrix {
    SpMatRow gamma;             // M x N
    Index zero_rows = 0;        // pixels that see no node
    std::vector<Index> nodes;   // nodes with a nonzero column, ascending
};

// Nodal share of top-face area: a third of every adjacent top triangle.
Vec top_area_shares(const MeshGrid& mesh);

TransportMatrix build_gamma(const MeshGrid& mesh, const DetectorPlane& det);

// One laser shot: a point source lumped on a single node.
struct LaserSource {
    Index node = 0;
    double power = 0.0;  // W/mm^2
};

// FEM load vectors: power / (2 zeta) on the source node, one column per laser.
Mat source_loads(Index num_nodes, const std::vector<LaserSource>& sources, double zeta);

// Phi^E, one column per source load.
Mat excitation_fields(const SystemMatrix& s_e, const Mat& loads);

// Q^f_l = eta * (C .* Phi^e_l).
Vec emission_source(const Vec& c, const Vec& phi_e, double eta);
Mat emission_sources(const Vec& c, const Mat& phi_e, double eta);

struct MeasurementSet {
    Mat y;                       // L x M Born ratios, 0 where masked
    Mat p_e;                     // L x M
    Mat p_f;                     // L x M
    kernels::MaskArray masked;   // L x M
    double floor = 0.0;
    std::uint64_t noise_seed = 0;

    Index num_lasers() const { return y.rows(); }
    Index num_pixels() const { return y.cols(); }
    Index num_unmasked() const;
};

inline constexpr double kDefaultFloorRel = 1e-12;

// Y = (Gamma Phi^F) ./ (Gamma Phi^E), masked where the excitation power is below
// floor_rel * max(P_e).
MeasurementSet born_measurements(const TransportMatrix& gamma, const Mat& phi_e, const Mat& phi_f,
                                 double floor_rel = kDefaultFloorRel);

struct NoiseModel {
    enum class Kind { None, Gaussian };
    Kind kind = Kind::None;
    double sigma_rel = 0.0;
};

// Multiplicative Gaussian noise Y (1 + sigma xi) on unmasked entries.
MeasurementSet add_noise(MeasurementSet meas, const NoiseModel& model, std::uint64_t seed);

// Convenience: full forward chain for a fluorophore distribution and a set of lasers.
MeasurementSet simulate_measurements(const SystemMatrix& s_e, const SystemMatrix& s_f, const TransportMatrix& gamma,
                                     const Vec& c, const Mat& loads, double eta, double floor_rel = kDefaultFloorRel);

}  // namespace illumopt
