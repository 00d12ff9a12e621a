#pragma once

#include <vector>

#include "illumopt/fem.hpp"
#include "illumopt/forward.hpp"
#include "illumopt/linear_map.hpp"

namespace illumopt {

// Position of one Born measurement: laser l, pixel k.
struct MeasIndex {
    Index laser = 0;
    Index pixel = 0;
    bool operator==(const MeasIndex&) const = default;
};

// Unmasked measurements in laser-major order (the row order of W, V and Y).
std::vector<MeasIndex> unmasked_rows(const MeasurementSet& meas);
Vec measurement_vector(const MeasurementSet& meas, const std::vector<MeasIndex>& rows);

// Dense W, one row per unmasked measurement.
struct SensitivityMatrix {
    Mat w;
    std::vector<MeasIndex> rows;
};

// G (N x M): column k solves S^f g_k = Gamma_k.
Mat adjoint_detector_fields(const SystemMatrix& s_f, const TransportMatrix& gamma);

// W[(l,k), i] = eta g_k(i) Phi^e_l(i) / (Gamma_k . Phi^e_l); rows whose denominator is at or
// under floor_rel * max(P_e) are dropped.
SensitivityMatrix assemble_W(const Mat& g, const Mat& phi_e, const TransportMatrix& gamma, double eta,
                             double floor_rel = kDefaultFloorRel);

// Rows of S^{-1} for a node subset (S symmetric, so row i = solution for e_i).
struct GreenRows {
    std::vector<Index> nodes;
    Mat rows;  // |nodes| x N
};

GreenRows green_rows(const SystemMatrix& s, std::vector<Index> nodes);

// Gamma restricted to a node subset and to pixels that see at least one node.
struct ReducedTransport {
    std::vector<Index> pixels;  // active pixel ids
    Mat gamma;                  // |pixels| x |nodes|
};

ReducedTransport reduce_transport(const TransportMatrix& gamma, const std::vector<Index>& nodes);

// Matrix-free W. Same rows and values as assemble_W, built from |nodes| solves
// instead of M, and never materialised:
//   W_l C = eta diag(1/d_l) Gamma_v Z (Phi_l .* C).
class SensitivityOperator final : public LinearMap {
public:
    SensitivityOperator(const GreenRows& green_f, const TransportMatrix& gamma, const Mat& phi_e,
                        const MeasurementSet& meas, double eta);

    Index rows() const override { return static_cast<Index>(rows_.size()); }
    Index cols() const override { return phi_.rows(); }
    void apply(const Vec& x, Vec& y) const override;
    void apply_adjoint(const Vec& y, Vec& x) const override;

    const std::vector<MeasIndex>& row_index() const { return rows_; }
    // Materialises W; for tests and small problems.
    Mat dense() const;

private:
    Mat z_;                           // rows of (S^f)^{-1} at visible nodes
    ReducedTransport transport_;
    Mat phi_;                         // N x L
    Mat scale_;                       // |active pixels| x L: eta / d, zero where masked
    std::vector<MeasIndex> rows_;
    std::vector<std::pair<Index, Index>> slots_;  // (active pixel slot, laser) per row
};

}  // namespace illumopt
