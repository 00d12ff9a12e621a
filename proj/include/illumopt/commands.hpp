#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "illumopt/config.hpp"

namespace illumopt {

struct CommandOptions {
    std::string config;                  // empty = defaults
    std::string out;                     // overrides output.dir
    std::optional<std::uint64_t> seed;
    std::optional<Index> rounds;
    std::optional<double> mu;
    std::optional<double> lambda;
    std::string mu_sweep;                // "lo:hi:n"
    bool quiet = false;

    std::string measurements;            // reconstruct / optimize input
    std::string pattern;                 // pattern the measurements were taken with
    std::string recon;                   // optimize / metrics input
    std::string truth;                   // metrics input
    bool dump_w = false;
};

// Config with command-line overrides applied.
RunConfig resolve_config(const CommandOptions& opts);

struct MuSweep {
    double lo = 0.0;
    double hi = 0.0;
    Index n = 0;
    std::vector<double> values() const;  // geometric, lo..hi inclusive
};
MuSweep parse_mu_sweep(const std::string& text);

int cmd_forward(const CommandOptions& opts);
int cmd_reconstruct(const CommandOptions& opts);
int cmd_optimize(const CommandOptions& opts);
int cmd_loop(const CommandOptions& opts);
int cmd_metrics(const CommandOptions& opts);

}  // namespace illumopt
