#include "illumopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace illumopt {

namespace {

using json = nlohmann::json;

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

// Walks one JSON object, remembering which keys were consumed.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json* child(const std::string& key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string key(const std::string& k) const { return join(path_, k); }

    void number(const std::string& k, double& out) {
        if (const json* v = child(k)) {
            if (!v->is_number()) throw ConfigError(key(k), "expected a number");
            out = v->get<double>();
        }
    }

    void integer(const std::string& k, Index& out) {
        if (const json* v = child(k)) {
            if (!v->is_number_integer()) throw ConfigError(key(k), "expected an integer");
            out = v->get<Index>();
        }
    }

    void text(const std::string& k, std::string& out) {
        if (const json* v = child(k)) {
            if (!v->is_string()) throw ConfigError(key(k), "expected a string");
            out = v->get<std::string>();
        }
    }

    template <std::size_t N>
    void numbers(const std::string& k, std::array<double, N>& out) {
        if (const json* v = child(k)) out = fixed<N>(*v, key(k));
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
        }
    }

    template <std::size_t N>
    static std::array<double, N> fixed(const json& v, const std::string& where) {
        if (!v.is_array() || v.size() != N) throw ConfigError(where, fmt::format("expected {} numbers", N));
        std::array<double, N> out{};
        for (std::size_t i = 0; i < N; ++i) {
            if (!v[i].is_number()) throw ConfigError(where, fmt::format("expected {} numbers", N));
            out[i] = v[i].get<double>();
        }
        return out;
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

int axis_from(const std::string& s, const std::string& key) {
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    throw ConfigError(key, fmt::format("unknown axis '{}'", s));
}

void read_phantom(Section& root, PhantomSpec& p) {
    const json* node = root.child("phantom");
    if (!node) return;
    Section s(*node, "phantom");
    s.numbers("dims_mm", p.dims);
    s.number("spacing_mm", p.spacing);
    s.number("mu_a", p.mu_a);
    s.number("mu_s", p.mu_s);
    s.number("g", p.g);
    s.number("zeta", p.zeta);
    s.number("eta", p.eta);
    s.finish();
    for (int a = 0; a < 3; ++a) require(p.dims[a] > 0.0, "phantom.dims_mm", "dimensions must be positive");
    require(p.spacing > 0.0, "phantom.spacing_mm", "must be positive");
    for (int a = 0; a < 3; ++a) {
        const double n = p.dims[a] / p.spacing;
        require(std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n), "phantom.dims_mm",
                "dimensions must be integer multiples of spacing_mm");
    }
    require(p.mu_a >= 0.0, "phantom.mu_a", fmt::format("{} must be non-negative", p.mu_a));
    require(p.mu_s >= 0.0, "phantom.mu_s", fmt::format("{} must be non-negative", p.mu_s));
    require(p.g > -1.0 && p.g < 1.0, "phantom.g", "must lie in (-1, 1)");
    require(p.zeta > 0.0, "phantom.zeta", "must be positive");
    require(p.eta > 0.0, "phantom.eta", "must be positive");
}

void read_inclusions(Section& root, PhantomSpec& p) {
    const json* node = root.child("inclusions");
    if (!node) return;
    if (!node->is_array()) throw ConfigError("inclusions", "expected an array");
    p.inclusions.clear();
    for (std::size_t i = 0; i < node->size(); ++i) {
        const std::string path = fmt::format("inclusions[{}]", i);
        Section s((*node)[i], path);
        std::array<double, 3> lo{}, hi{};
        require(s.has("min_corner"), s.key("min_corner"), "required");
        require(s.has("max_corner"), s.key("max_corner"), "required");
        s.numbers("min_corner", lo);
        s.numbers("max_corner", hi);
        Inclusion inc;
        inc.min_corner = Point3(lo[0], lo[1], lo[2]);
        inc.max_corner = Point3(hi[0], hi[1], hi[2]);
        s.number("intensity", inc.intensity);
        s.finish();
        require(inc.intensity >= 0.0, s.key("intensity"), "must be non-negative");
        p.inclusions.push_back(inc);
    }
}

void read_lasers(Section& root, LaserGridSpec& l) {
    const json* node = root.child("lasers");
    if (!node) return;
    Section s(*node, "lasers");
    std::array<double, 2> center{l.center_x, l.center_y};
    s.numbers("grid_center", center);
    l.center_x = center[0];
    l.center_y = center[1];
    s.number("pitch_mm", l.pitch);
    s.integer("nx", l.nx);
    s.integer("ny", l.ny);
    s.number("power", l.power);
    s.number("p_max", l.p_max);
    s.integer("max_lasers", l.max_lasers);
    s.finish();
    require(l.pitch > 0.0, "lasers.pitch_mm", "must be positive");
    require(l.nx > 0, "lasers.nx", "must be positive");
    require(l.ny > 0, "lasers.ny", "must be positive");
    require(l.p_max > 0.0, "lasers.p_max", "must be positive");
    require(l.power > 0.0 && l.power <= l.p_max, "lasers.power", "must lie in (0, p_max]");
    require(l.max_lasers >= 0, "lasers.max_lasers", "must be non-negative");
}

void read_detector(Section& root, DetectorSpec& d) {
    const json* node = root.child("detector");
    if (!node) return;
    Section s(*node, "detector");
    s.integer("rows", d.rows);
    s.integer("cols", d.cols);
    s.number("pitch_mm", d.pitch);
    s.number("height_mm", d.height);
    s.number("acceptance_deg", d.acceptance_deg);
    s.finish();
    require(d.rows > 0, "detector.rows", "must be positive");
    require(d.cols > 0, "detector.cols", "must be positive");
    require(d.pitch > 0.0, "detector.pitch_mm", "must be positive");
    require(d.height > 0.0, "detector.height_mm", "must be positive");
    require(d.acceptance_deg > 0.0 && d.acceptance_deg <= 90.0, "detector.acceptance_deg", "must lie in (0, 90]");
}

void read_recon(Section& root, ReconConfig& r) {
    const json* node = root.child("recon");
    if (!node) return;
    Section s(*node, "recon");
    s.number("lambda", r.lambda);
    s.number("alpha", r.alpha);
    s.integer("max_iters", r.max_iters);
    s.number("tol", r.tol);
    s.finish();
    require(r.lambda > 0.0, "recon.lambda", "must be positive");
    require(r.alpha >= 0.0 && r.alpha <= 1.0, "recon.alpha", "must lie in [0, 1]");
    require(r.max_iters > 0, "recon.max_iters", "must be positive");
    require(r.tol >= 0.0, "recon.tol", "must be non-negative");
}

void read_illum(Section& root, DesignSettings& d) {
    const json* node = root.child("illum");
    if (!node) return;
    Section s(*node, "illum");
    auto& r = d.reweight;
    s.number("mu", r.mu);
    s.number("epsilon", r.epsilon);
    s.integer("outer_iters", r.outer_iters);
    s.integer("sweeps", r.sweeps);
    s.number("tol", r.tol);
    s.number("gamma_interior", d.gamma_interior);
    std::string support = d.full_surface ? "surface" : "top";
    s.text("support", support);
    s.finish();
    require(r.mu > 0.0, "illum.mu", "must be positive");
    require(r.epsilon > 0.0, "illum.epsilon", "must be positive");
    require(r.outer_iters > 0, "illum.outer_iters", "must be positive");
    require(r.sweeps > 0, "illum.sweeps", "must be positive");
    require(r.tol >= 0.0, "illum.tol", "must be non-negative");
    require(d.gamma_interior >= 0.0, "illum.gamma_interior", "must be non-negative");
    require(support == "top" || support == "surface", "illum.support", "expected \"top\" or \"surface\"");
    d.full_surface = support == "surface";
}

void read_loop(Section& root, LoopSettings& l) {
    const json* node = root.child("loop");
    if (!node) return;
    Section s(*node, "loop");
    s.integer("rounds_max", l.rounds_max);
    s.number("stop_tol", l.stop_tol);
    s.finish();
    require(l.rounds_max > 0, "loop.rounds_max", "must be positive");
    require(l.stop_tol >= 0.0, "loop.stop_tol", "must be non-negative");
}

void read_noise(Section& root, PhantomSpec& p) {
    const json* node = root.child("noise");
    if (!node) return;
    Section s(*node, "noise");
    std::string model = p.noise.kind == NoiseModel::Kind::Gaussian ? "gaussian" : "none";
    s.text("model", model);
    s.number("sigma_rel", p.noise.sigma_rel);
    if (const json* v = s.child("seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
            throw ConfigError("noise.seed", "expected a non-negative integer");
        p.seed = v->get<std::uint64_t>();
    }
    s.finish();
    require(model == "none" || model == "gaussian", "noise.model", "expected \"none\" or \"gaussian\"");
    p.noise.kind = model == "gaussian" ? NoiseModel::Kind::Gaussian : NoiseModel::Kind::None;
    require(p.noise.sigma_rel >= 0.0, "noise.sigma_rel", "must be non-negative");
}

void read_output(Section& root, OutputSettings& o) {
    const json* node = root.child("output");
    if (!node) return;
    Section s(*node, "output");
    s.text("dir", o.dir);
    const json* axes = s.child("slice_axes");
    const json* coords = s.child("slice_coords");
    s.finish();
    require(!o.dir.empty(), "output.dir", "must not be empty");
    if (!axes && !coords) return;
    require(axes && coords, axes ? "output.slice_coords" : "output.slice_axes",
            "slice_axes and slice_coords must be given together");
    require(axes->is_array(), "output.slice_axes", "expected an array");
    require(coords->is_array(), "output.slice_coords", "expected an array");
    require(axes->size() == coords->size(), "output.slice_coords", "length must match slice_axes");
    o.slices.clear();
    for (std::size_t i = 0; i < axes->size(); ++i) {
        const std::string ak = fmt::format("output.slice_axes[{}]", i);
        const std::string ck = fmt::format("output.slice_coords[{}]", i);
        require((*axes)[i].is_string(), ak, "expected \"x\", \"y\" or \"z\"");
        require((*coords)[i].is_number(), ck, "expected a number");
        o.slices.push_back({axis_from((*axes)[i].get<std::string>(), ak), (*coords)[i].get<double>()});
    }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return cfg;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", fmt::format("invalid JSON: {}", e.what()));
    }
    Section root(doc, "");
    read_phantom(root, cfg.phantom);
    read_inclusions(root, cfg.phantom);
    read_lasers(root, cfg.phantom.lasers);
    read_detector(root, cfg.phantom.detector);
    read_recon(root, cfg.loop.recon);
    read_illum(root, cfg.loop.design);
    read_loop(root, cfg.loop);
    read_noise(root, cfg.phantom);
    read_output(root, cfg.output);
    root.finish();
    cfg.phantom.validate();
    for (const auto& sl : cfg.output.slices) {
        require(sl.coord >= 0.0 && sl.coord <= cfg.phantom.dims[sl.axis], "output.slice_coords",
                "slice plane outside the phantom");
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read config '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
    const auto& p = cfg.phantom;
    json doc;
    doc["phantom"] = {{"dims_mm", p.dims}, {"spacing_mm", p.spacing}, {"mu_a", p.mu_a}, {"mu_s", p.mu_s},
                      {"g", p.g},         {"zeta", p.zeta},          {"eta", p.eta}};
    doc["inclusions"] = json::array();
    for (const auto& inc : p.inclusions) {
        doc["inclusions"].push_back({{"min_corner", {inc.min_corner.x(), inc.min_corner.y(), inc.min_corner.z()}},
                                     {"max_corner", {inc.max_corner.x(), inc.max_corner.y(), inc.max_corner.z()}},
                                     {"intensity", inc.intensity}});
    }
    const auto& l = p.lasers;
    doc["lasers"] = {{"grid_center", {l.center_x, l.center_y}}, {"pitch_mm", l.pitch}, {"nx", l.nx},
                     {"ny", l.ny}, {"power", l.power}, {"p_max", l.p_max}, {"max_lasers", l.max_lasers}};
    const auto& d = p.detector;
    doc["detector"] = {{"rows", d.rows}, {"cols", d.cols}, {"pitch_mm", d.pitch}, {"height_mm", d.height},
                       {"acceptance_deg", d.acceptance_deg}};
    const auto& r = cfg.loop.recon;
    doc["recon"] = {{"lambda", r.lambda}, {"alpha", r.alpha}, {"max_iters", r.max_iters}, {"tol", r.tol}};
    const auto& w = cfg.loop.design.reweight;
    doc["illum"] = {{"mu", w.mu},
                    {"epsilon", w.epsilon},
                    {"outer_iters", w.outer_iters},
                    {"sweeps", w.sweeps},
                    {"tol", w.tol},
                    {"gamma_interior", cfg.loop.design.gamma_interior},
                    {"support", cfg.loop.design.full_surface ? "surface" : "top"}};
    doc["loop"] = {{"rounds_max", cfg.loop.rounds_max}, {"stop_tol", cfg.loop.stop_tol}};
    doc["noise"] = {{"model", p.noise.kind == NoiseModel::Kind::Gaussian ? "gaussian" : "none"},
                    {"sigma_rel", p.noise.sigma_rel},
                    {"seed", p.seed}};
    json axes = json::array(), coords = json::array();
    for (const auto& sl : cfg.output.slices) {
        axes.push_back(std::string(1, "xyz"[sl.axis]));
        coords.push_back(sl.coord);
    }
    doc["output"] = {{"dir", cfg.output.dir}, {"slice_axes", axes}, {"slice_coords", coords}};
    return doc.dump(2);
}

}  // namespace illumopt
