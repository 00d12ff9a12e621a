#include <doctest.h>

#include <string>

#include "illumopt/config.hpp"

using namespace illumopt;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("empty config gives the reference phantom") {
    const RunConfig cfg = parse_config_text("");
    const PhantomSpec ref = reference_phantom();
    CHECK(cfg.phantom.dims == ref.dims);
    CHECK(cfg.phantom.mu_a == 0.01);
    CHECK(cfg.phantom.mu_s == 1.0);
    CHECK(cfg.phantom.inclusions.size() == 2);
    CHECK(cfg.phantom.lasers.nx == 10);
    CHECK(cfg.phantom.detector.cols == 60);
    CHECK(cfg.loop.rounds_max == 10);
    CHECK(cfg.loop.stop_tol == 1e-3);
    CHECK(cfg.loop.design.reweight.mu == 1.5e-8);
    CHECK(parse_config_text("{}").phantom.dims == ref.dims);
}

TEST_CASE("range violations name the key") {
    CHECK(error_of(R"({"phantom": {"mu_a": -1}})").find("phantom.mu_a") != std::string::npos);
    CHECK(error_of(R"({"illum": {"epsilon": 0}})").find("illum.epsilon") != std::string::npos);
    CHECK(error_of(R"({"recon": {"alpha": 2}})").find("recon.alpha") != std::string::npos);
    CHECK(error_of(R"({"loop": {"rounds_max": 0}})").find("loop.rounds_max") != std::string::npos);
    CHECK(error_of(R"({"noise": {"model": "poisson"}})").find("noise.model") != std::string::npos);
    CHECK(error_of(R"({"inclusions": [{"min_corner": [1,1,1], "max_corner": [20,2,2]}]})") != "");
}

TEST_CASE("unknown keys and bad syntax are rejected") {
    CHECK(error_of(R"({"phantom": {"mu_x": 1}})").find("phantom.mu_x") != std::string::npos);
    CHECK(error_of(R"({"extra": 1})").find("extra") != std::string::npos);
    CHECK(error_of("{not json") != "");
    CHECK(error_of(R"({"phantom": {"mu_a": "big"}})").find("phantom.mu_a") != std::string::npos);
}

TEST_CASE("overrides and round trip") {
    const RunConfig cfg = parse_config_text(R"({
        "phantom": {"dims_mm": [6, 6, 6], "mu_a": 0.02},
        "inclusions": [{"min_corner": [1, 1, 3], "max_corner": [2, 2, 4], "intensity": 50}],
        "lasers": {"grid_center": [3, 3], "nx": 2, "ny": 2},
        "detector": {"rows": 8, "cols": 8, "acceptance_deg": 30},
        "noise": {"model": "gaussian", "sigma_rel": 0.01, "seed": 5},
        "illum": {"support": "surface", "gamma_interior": 100},
        "output": {"dir": "x", "slice_axes": ["z"], "slice_coords": [2]}
    })");
    CHECK(cfg.phantom.dims[0] == 6.0);
    CHECK(cfg.phantom.mu_a == 0.02);
    CHECK(cfg.phantom.inclusions.at(0).intensity == 50.0);
    CHECK(cfg.phantom.detector.acceptance_deg == 30.0);
    CHECK(cfg.phantom.noise.kind == NoiseModel::Kind::Gaussian);
    CHECK(cfg.phantom.seed == 5);
    CHECK(cfg.loop.design.full_surface);
    CHECK(cfg.output.slices.size() == 1);

    const RunConfig again = parse_config_text(config_to_json(cfg));
    CHECK(config_to_json(again) == config_to_json(cfg));
}
