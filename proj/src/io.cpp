#include "illumopt/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace illumopt::io {

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(fmt::format("cannot write '{}'", path));
    return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw Error(fmt::format("cannot read '{}'", path));
    return in;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error(fmt::format("write to '{}' failed", path));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

double to_double(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw Error(fmt::format("{}:{}: bad number '{}'", path, line, s));
    }
}

Index to_index(const std::string& s, const std::string& path, std::size_t line) {
    const double v = to_double(s, path, line);
    if (v != std::floor(v) || v < 0) throw Error(fmt::format("{}:{}: bad index '{}'", path, line, s));
    return static_cast<Index>(v);
}

// Rows of a CSV with the given header, split into cells.
std::vector<std::vector<std::string>> read_csv(const std::string& path, const std::string& header) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw Error(fmt::format("{}: expected header '{}'", path, header));
    const std::size_t width = split(header).size();
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != width) throw Error(fmt::format("{}:{}: expected {} columns", path, lineno, width));
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

void write_field_csv(const std::string& path, const MeshGrid& mesh, const Vec& values) {
    if (values.size() != mesh.num_nodes()) throw Error("field size does not match the mesh");
    auto out = open_out(path);
    out << "node_id,x,y,z,value\n";
    for (Index i = 0; i < mesh.num_nodes(); ++i) {
        const Point3& p = mesh.nodes[i];
        out << i << ',' << num(p.x()) << ',' << num(p.y()) << ',' << num(p.z()) << ',' << num(values[i]) << '\n';
    }
    finish(out, path);
}

Vec read_field_csv(const std::string& path, Index num_nodes) {
    const auto rows = read_csv(path, "node_id,x,y,z,value");
    if (num_nodes < 0) num_nodes = static_cast<Index>(rows.size());
    if (static_cast<Index>(rows.size()) != num_nodes)
        throw Error(fmt::format("{}: {} rows, mesh has {} nodes", path, rows.size(), num_nodes));
    Vec v(num_nodes);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (to_index(rows[r][0], path, r + 2) != static_cast<Index>(r))
            throw Error(fmt::format("{}:{}: node ids must be 0..N-1 in order", path, r + 2));
        v[static_cast<Index>(r)] = to_double(rows[r][4], path, r + 2);
    }
    return v;
}

void write_pattern_csv(const std::string& path, const MeshGrid& mesh, const IlluminationPattern& pattern) {
    auto out = open_out(path);
    out << "node_id,x,y,z,power\n";
    for (Index i : pattern.support()) {
        const Point3& p = mesh.nodes[i];
        out << i << ',' << num(p.x()) << ',' << num(p.y()) << ',' << num(p.z()) << ',' << num(pattern.power[i])
            << '\n';
    }
    finish(out, path);
}

IlluminationPattern read_pattern_csv(const std::string& path, const MeshGrid& mesh, double p_max) {
    IlluminationPattern p;
    p.power = Vec::Zero(mesh.num_nodes());
    p.p_max = p_max;
    const auto rows = read_csv(path, "node_id,x,y,z,power");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index id = to_index(rows[r][0], path, r + 2);
        if (id >= mesh.num_nodes()) throw Error(fmt::format("{}:{}: node {} not in mesh", path, r + 2, id));
        p.power[id] = to_double(rows[r][4], path, r + 2);
    }
    check_feasible(p, mesh);
    return p;
}

void write_measurements_csv(const std::string& path, const MeasurementSet& meas) {
    auto out = open_out(path);
    out << "l,k,Y,P_e,P_f,masked\n";
    for (Index l = 0; l < meas.num_lasers(); ++l) {
        for (Index k = 0; k < meas.num_pixels(); ++k) {
            out << l << ',' << k << ',' << num(meas.y(l, k)) << ',' << num(meas.p_e(l, k)) << ','
                << num(meas.p_f(l, k)) << ',' << (meas.masked(l, k) ? 1 : 0) << '\n';
        }
    }
    finish(out, path);
}

MeasurementSet read_measurements_csv(const std::string& path) {
    const auto rows = read_csv(path, "l,k,Y,P_e,P_f,masked");
    if (rows.empty()) throw Error(fmt::format("{}: no measurements", path));
    Index lasers = 0, pixels = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        lasers = std::max(lasers, to_index(rows[r][0], path, r + 2) + 1);
        pixels = std::max(pixels, to_index(rows[r][1], path, r + 2) + 1);
    }
    if (static_cast<Index>(rows.size()) != lasers * pixels)
        throw Error(fmt::format("{}: expected a full {} x {} grid", path, lasers, pixels));
    MeasurementSet m;
    m.y = Mat::Zero(lasers, pixels);
    m.p_e = Mat::Zero(lasers, pixels);
    m.p_f = Mat::Zero(lasers, pixels);
    m.masked = kernels::MaskArray::Zero(lasers, pixels);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index l = to_index(rows[r][0], path, r + 2);
        const Index k = to_index(rows[r][1], path, r + 2);
        m.y(l, k) = to_double(rows[r][2], path, r + 2);
        m.p_e(l, k) = to_double(rows[r][3], path, r + 2);
        m.p_f(l, k) = to_double(rows[r][4], path, r + 2);
        m.masked(l, k) = to_index(rows[r][5], path, r + 2) != 0;
    }
    m.floor = kDefaultFloorRel * m.p_e.maxCoeff();
    return m;
}

void write_fista_log(const std::string& path, const std::vector<IterationLog>& log) {
    auto out = open_out(path);
    out << "iter,objective,nnz\n";
    for (const auto& e : log) out << e.iter << ',' << num(e.objective) << ',' << e.nnz << '\n';
    finish(out, path);
}

void write_mesh_csv(const std::string& nodes_path, const std::string& tets_path, const MeshGrid& mesh) {
    auto nodes = open_out(nodes_path);
    nodes << "node_id,x,y,z,surface,illum_allowed\n";
    for (Index i = 0; i < mesh.num_nodes(); ++i) {
        const Point3& p = mesh.nodes[i];
        const bool surface = mesh.classified() && mesh.node_class[i] == NodeClass::Surface;
        const bool allowed = mesh.classified() && mesh.illum_allowed[i];
        nodes << i << ',' << num(p.x()) << ',' << num(p.y()) << ',' << num(p.z()) << ',' << surface << ','
              << allowed << '\n';
    }
    finish(nodes, nodes_path);
    auto tets = open_out(tets_path);
    tets << "tet_id,n0,n1,n2,n3\n";
    for (Index t = 0; t < mesh.num_tets(); ++t) {
        const auto& v = mesh.tets[t];
        tets << t << ',' << v[0] << ',' << v[1] << ',' << v[2] << ',' << v[3] << '\n';
    }
    finish(tets, tets_path);
}

void write_matrix_bin(const std::string& path, const Mat& m) {
    auto out = open_out(path, true);
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    out.write("ILWM", 4);
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    finish(out, path);
}

Mat read_matrix_bin(const std::string& path) {
    auto in = open_in(path, true);
    char magic[4];
    std::int64_t dims[2];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in || std::memcmp(magic, "ILWM", 4) != 0 || dims[0] < 0 || dims[1] < 0)
        throw Error(fmt::format("{}: not a matrix dump", path));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(dims[0], dims[1]);
    in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!in) throw Error(fmt::format("{}: truncated", path));
    return rm;
}

SliceImage slice(const MeshGrid& mesh, const Vec& values, int axis, double coord) {
    if (axis < 0 || axis > 2) throw Error("slice axis must be 0, 1 or 2");
    if (values.size() != mesh.num_nodes()) throw Error("field size does not match the mesh");
    const Index plane = std::clamp<Index>(static_cast<Index>(std::lround(coord / mesh.spacing)), 0, mesh.cells[axis]);
    // Horizontal and vertical grid axes of the image.
    const int u = axis == 0 ? 1 : 0;
    const int v = axis == 2 ? 1 : 2;
    SliceImage img;
    img.width = mesh.cells[u] + 1;
    img.height = mesh.cells[v] + 1;
    img.pixels.assign(static_cast<std::size_t>(img.width * img.height), 0);
    std::vector<double> vals(img.pixels.size());
    double vmax = 0.0;
    for (Index r = 0; r < img.height; ++r) {
        for (Index c = 0; c < img.width; ++c) {
            std::array<Index, 3> ijk{};
            ijk[axis] = plane;
            ijk[u] = c;
            ijk[v] = img.height - 1 - r;
            const double x = values[mesh.node_id(ijk[0], ijk[1], ijk[2])];
            vals[static_cast<std::size_t>(r * img.width + c)] = x;
            vmax = std::max(vmax, x);
        }
    }
    if (vmax > 0.0) {
        for (std::size_t i = 0; i < vals.size(); ++i)
            img.pixels[i] = static_cast<int>(std::lround(255.0 * std::max(vals[i], 0.0) / vmax));
    }
    return img;
}

void write_pgm(const std::string& path, const SliceImage& img) {
    auto out = open_out(path);
    out << "P2\n" << img.width << ' ' << img.height << "\n255\n";
    for (Index r = 0; r < img.height; ++r) {
        for (Index c = 0; c < img.width; ++c) {
            if (c) out << ' ';
            out << img.pixels[static_cast<std::size_t>(r * img.width + c)];
        }
        out << '\n';
    }
    finish(out, path);
}

std::string metrics_json(const MetricsReport& m) {
    return fmt::format("{{\"mse\": {}, \"dice\": {}, \"vr\": {}, \"snr_db\": {}, \"roi_recon\": {}, \"roi_truth\": {}}}",
                       num(m.mse), num(m.dice), num(m.vr), std::isinf(m.snr_db) ? "null" : num(m.snr_db),
                       m.roi_recon, m.roi_truth);
}

std::string round_json(const RoundRecord& rec) {
    return fmt::format(
        "{{\n  \"round\": {},\n  \"lasers\": {},\n  \"measurements\": {},\n  \"metrics\": {},\n"
        "  \"recon\": {{\"objective\": {}, \"iterations\": {}, \"lipschitz\": {}}},\n"
        "  \"next_lasers\": {},\n  \"pattern_change\": {},\n  \"design_all_zero\": {},\n"
        "  \"laser_bound_exceeded\": {}\n}}\n",
        rec.round, rec.lasers, rec.measurements, metrics_json(rec.metrics), num(rec.recon.objective),
        rec.recon.iterations, num(rec.recon.lipschitz), rec.next_lasers, num(rec.pattern_change), rec.design_all_zero,
        rec.laser_bound_exceeded);
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

std::string read_text(const std::string& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace illumopt::io
