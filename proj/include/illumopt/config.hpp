#pragma once

#include <string>
#include <vector>

#include "illumopt/pipeline.hpp"

namespace illumopt {

struct SlicePlane {
    int axis = 2;         // 0 = x, 1 = y, 2 = z
    double coord = 0.0;   // mm
};

struct OutputSettings {
    std::string dir = "run";
    std::vector<SlicePlane> slices{{2, 6.0}, {0, 13.0}, {1, 9.0}};  // top, left, front through (13, 9, 6)
};

struct RunConfig {
    PhantomSpec phantom = reference_phantom();
    LoopSettings loop;
    OutputSettings output;
};

// JSON document; unknown keys are rejected and every range error names its key path.
// An empty document yields the defaults.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

std::string config_to_json(const RunConfig& cfg);

}  // namespace illumopt
