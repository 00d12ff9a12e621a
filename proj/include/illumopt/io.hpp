#pragma once

#include <string>
#include <vector>

#include "illumopt/config.hpp"
#include "illumopt/pipeline.hpp"

namespace illumopt::io {

// Shortest text that parses back to the same double.
std::string num(double v);

// node_id,x,y,z,value
void write_field_csv(const std::string& path, const MeshGrid& mesh, const Vec& values);
// num_nodes < 0 accepts any length.
Vec read_field_csv(const std::string& path, Index num_nodes = -1);

// node_id,x,y,z,power, nonzero entries only
void write_pattern_csv(const std::string& path, const MeshGrid& mesh, const IlluminationPattern& pattern);
IlluminationPattern read_pattern_csv(const std::string& path, const MeshGrid& mesh, double p_max);

// l,k,Y,P_e,P_f,masked over the full L x M grid
void write_measurements_csv(const std::string& path, const MeasurementSet& meas);
MeasurementSet read_measurements_csv(const std::string& path);

// iter,objective,nnz
void write_fista_log(const std::string& path, const std::vector<IterationLog>& log);

// Debug dumps: node and tet tables; W as "ILWM", int64 rows, int64 cols, row-major float64.
void write_mesh_csv(const std::string& nodes_path, const std::string& tets_path, const MeshGrid& mesh);
void write_matrix_bin(const std::string& path, const Mat& m);
Mat read_matrix_bin(const std::string& path);

// Nodes on the grid plane nearest `coord` along `axis`; rows run from high to low
// along the plane's second axis. Pixel = round(255 x / max x), 0 when max <= 0.
struct SliceImage {
    Index width = 0;
    Index height = 0;
    std::vector<int> pixels;  // row-major
};
SliceImage slice(const MeshGrid& mesh, const Vec& values, int axis, double coord);
void write_pgm(const std::string& path, const SliceImage& img);

std::string metrics_json(const MetricsReport& m);
std::string round_json(const RoundRecord& rec);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace illumopt::io
