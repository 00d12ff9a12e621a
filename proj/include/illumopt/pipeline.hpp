#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "illumopt/design.hpp"
#include "illumopt/fem.hpp"
#include "illumopt/forward.hpp"
#include "illumopt/illum.hpp"
#include "illumopt/jacobian.hpp"
#include "illumopt/metrics.hpp"
#include "illumopt/recon.hpp"

namespace illumopt {

// Axis-aligned box of constant fluorophore concentration (mm, closed).
struct Inclusion {
    Point3 min_corner{0, 0, 0};
    Point3 max_corner{0, 0, 0};
    double intensity = 100.0;
};

struct LaserGridSpec {
    double center_x = 7.5;
    double center_y = 7.5;
    double pitch = 1.0;
    Index nx = 10;
    Index ny = 10;
    double power = 1.0;
    double p_max = 1.0;
    Index max_lasers = 0;
};

struct DetectorSpec {
    Index rows = 30;
    Index cols = 60;
    double pitch = 1.0;
    double height = 10.0;
    double acceptance_deg = 45.0;
};

struct PhantomSpec {
    std::array<double, 3> dims{15.0, 15.0, 15.0};
    double spacing = 1.0;
    double mu_a = 0.01;
    double mu_s = 1.0;
    double g = 0.0;
    double zeta = 1.0;
    double c = 2.2e11;
    double eta = 1.0;
    std::vector<Inclusion> inclusions;
    LaserGridSpec lasers;
    DetectorSpec detector;
    NoiseModel noise;
    std::uint64_t seed = 1;

    void validate() const;
};

// The reference phantom: two 1 x 1 x 10 mm bars of intensity 100, 3 mm below the
// top face, 6 mm apart (centre to centre), in a 15 mm cube.
std::vector<Inclusion> two_bar_inclusions();
PhantomSpec reference_phantom();

Vec ground_truth(const MeshGrid& mesh, const std::vector<Inclusion>& inclusions);

struct DesignSettings {
    ReweightConfig reweight;
    double gamma_interior = 0.0;
    bool full_surface = false;  // optimise over every surface node, penalising disallowed ones
};

struct LoopSettings {
    ReconConfig recon;
    DesignSettings design;
    Index rounds_max = 10;
    double stop_tol = 1e-3;
};

// Geometry, operators and truth that stay fixed across rounds. Excitation and
// emission share the optical coefficients, so one system matrix serves both.
class Experiment {
public:
    explicit Experiment(PhantomSpec spec, bool full_surface = false);

    const PhantomSpec& spec() const { return spec_; }
    const MeshGrid& mesh() const { return mesh_; }
    const OpticalMedium& medium() const { return medium_; }
    const SystemMatrix& system() const { return system_; }
    const TransportMatrix& gamma() const { return gamma_; }
    const GreenRows& green() const { return green_; }
    const DesignCache& design_cache() const { return cache_; }
    const Vec& truth() const { return truth_; }

    IlluminationPattern initial_pattern() const;
    // Laser loads and fields for a pattern.
    Mat loads(const IlluminationPattern& pattern) const;
    // Noisy Born measurements of the true phantom under `phi_e`.
    MeasurementSet measure(const Mat& phi_e, std::uint64_t seed) const;

private:
    PhantomSpec spec_;
    MeshGrid mesh_;
    OpticalMedium medium_;
    SystemMatrix system_;
    TransportMatrix gamma_;
    GreenRows green_;
    DesignCache cache_;
    Vec truth_;
};

struct RoundRecord {
    Index round = 0;
    IlluminationPattern pattern;       // pattern the round measured with
    Index lasers = 0;
    FluorescenceImage recon;
    MetricsReport metrics;
    IlluminationPattern next_pattern;  // designed from this round's reconstruction
    Index next_lasers = 0;
    double pattern_change = 0.0;       // |next - pattern| / max(|pattern|, delta)
    Index measurements = 0;
    bool design_all_zero = false;
    bool laser_bound_exceeded = false;
    double seconds = 0.0;
};

// Pattern design around the current pattern's excitation fields: the normal
// equations over the candidate nodes, warm-started at the current powers.
struct DesignProblem {
    std::vector<Index> support;
    QuadraticModel model;
    Vec x0;
};

DesignProblem design_problem(const Experiment& exp, const IlluminationPattern& current, const Mat& phi_e,
                             const MeasurementSet& meas, const Vec& c, const DesignSettings& settings);

struct DesignOutcome {
    IlluminationPattern pattern;
    ReweightResult result;
    double residual = 0.0;  // |Y - V x|
};

DesignOutcome solve_design(const Experiment& exp, const DesignProblem& problem, const ReweightConfig& cfg,
                           double p_max, Index max_lasers);

// One reconstruct-then-design step. When `c_override` is given the reconstruction is
// skipped and the design step uses it instead.
RoundRecord run_round(const Experiment& exp, const IlluminationPattern& pattern, Index round,
                      const LoopSettings& settings, const Vec* c_override = nullptr);

struct LoopResult {
    std::vector<RoundRecord> records;
    bool converged = false;
    std::string error;  // non-empty when a round failed; earlier records are kept

    bool ok() const { return error.empty(); }
    // Round >= 1 with the lowest MSE (equivalently highest SNR); nullopt with fewer than two rounds.
    std::optional<std::size_t> best_updated_round() const;
};

using RoundObserver = std::function<void(const RoundRecord&)>;

LoopResult run_loop(const Experiment& exp, const LoopSettings& settings, const RoundObserver& observer = {},
                    std::optional<IlluminationPattern> initial = std::nullopt);

}  // namespace illumopt
