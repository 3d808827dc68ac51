#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npt/config.hpp"
#include "npt/core.hpp"
#include "npt/forcefield.hpp"
#include "npt/integrators.hpp"
#include "npt/noise.hpp"
#include "npt/observables.hpp"

namespace npt {

PhysicalParams make_params(const ExperimentConfig& config);
ForceFieldModel make_field(const ExperimentConfig& config);
double initial_volume(const ExperimentConfig& config);

/// n points on the smallest m^3 cubic lattice with m^3 >= n, cell centred.
std::vector<Vec3> lattice_positions(std::size_t n, double box_length);

/// Lattice positions at the configured volume; Maxwell-Boltzmann momenta
/// draw 3N Gaussians from `noise`, zero momenta draw none.
SystemState initial_state(const ExperimentConfig& config, GaussianSource& noise);

struct FailureInfo {
    std::uint64_t step = 0;  // 1-based index of the step that failed
    std::string message;
    double volume_before = 0.0;
    double attempted_volume = 0.0;
};

using RecordSink = std::function<void(std::uint64_t step, const ObservableRecord&)>;

struct RunSummary {
    std::uint64_t steps_completed = 0;
    std::optional<FailureInfo> failure;
    SystemState final_state;
};

/// Runs config.steps steps on stream (seed, stream_id). Steps are numbered
/// from 1; a record is emitted after step k when k > burn_in and
/// (k - burn_in) is a multiple of stride. Stops at the first step failure.
RunSummary run_trajectory(const ExperimentConfig& config, const RecordSink& sink,
                          std::uint64_t stream_id = 0);

struct ObservableSeries {
    std::vector<std::uint64_t> steps;
    std::vector<ObservableRecord> records;
    std::optional<FailureInfo> failure;
};

ObservableSeries run_trajectory(const ExperimentConfig& config, std::uint64_t stream_id = 0);

/// Running moments of a trajectory without storing it.
struct TrajectoryMoments {
    StreamingMoments volume, volume_sq, pressure, pv;
    std::optional<FailureInfo> failure;
};

TrajectoryMoments trajectory_moments(const ExperimentConfig& config, std::uint64_t stream_id = 0);

enum class TestFunction { Volume, VolumeSquared, ExpSqrtVolume, Pressure, Density, SqrtVolumeExp };

std::string_view test_function_name(TestFunction phi);
TestFunction parse_test_function(std::string_view name);
std::vector<TestFunction> parse_test_functions(std::span<const std::string> names);
double evaluate(TestFunction phi, const SystemState& state, const ForceFieldModel& field,
                const PhysicalParams& params);

struct TerminalEnsemble {
    std::vector<TestFunction> functions;
    /// values[k][f]: function f at the terminal state of replica k; empty
    /// for failed replicas.
    std::vector<std::vector<double>> values;
    std::vector<double> means;
    std::vector<double> standard_errors;
    std::size_t failures = 0;
};

/// config.replicas independent trajectories of config.steps steps; replica k
/// uses stream_id k.
TerminalEnsemble replicate_terminal(const ExperimentConfig& config,
                                    std::span<const TestFunction> functions);

struct WeakOrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of log2 residuals
    std::vector<std::size_t> excluded;  // indices with nonpositive or non-finite error
};

/// Least-squares line through (log2 dt, log2 error).
WeakOrderFit weak_order_fit(std::span<const double> dts, std::span<const double> errors);

struct ConvergenceLevel {
    int level = 0;
    double dt = 0.0;
    std::vector<double> means;
    std::vector<double> errors;  // relative to the reference means
    /// Standard error of the relative error estimate: paired over replicas
    /// under Brownian coupling, combined independent errors otherwise.
    std::vector<double> error_se;
    std::size_t failures = 0;
};

struct ConvergenceReport {
    std::vector<TestFunction> functions;
    std::vector<ConvergenceLevel> levels;
    ConvergenceLevel reference;
    std::vector<WeakOrderFit> fits;  // one per function
};

/// Weak error of the terminal ensemble mean at dt = 2^-l, l in
/// [level_min, level_max], against dt = 2^-level_ref, horizon t_end.
/// With Brownian coupling every level of replica k is driven by one fine
/// Brownian path, each coarse Gaussian being the exact-in-law aggregate of
/// its fine increments. Independent coupling gives each level its own streams.
ConvergenceReport run_convergence(const ExperimentConfig& config);

/// (beta P0)^(N+1) / N! V^N exp(-beta P0 V).
double exact_free_gas_density(double volume, std::size_t n, double beta, double p0);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
    std::vector<double> density;
    std::size_t total = 0;
    std::size_t outside = 0;

    double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
    double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }
    std::vector<double> centers() const;
};

/// Equal-width bins on [lo, hi]; lo == hi takes the sample range. Samples
/// outside the range are rejected unless allow_outside, in which case they
/// are counted in `outside` and still normalise the density.
Histogram histogram(std::span<const double> samples, double lo, double hi, std::size_t bins,
                    bool allow_outside = false);

/// Midpoint-rule L1 distance between a histogram and a density.
double histogram_l1(const Histogram& h, const std::function<double(double)>& density);

std::vector<double> uniform_grid(double lo, double hi, std::size_t points);
double trapezoid(std::span<const double> values, std::span<const double> grid);
std::vector<double> normalize_on_grid(std::span<const double> values, std::span<const double> grid);

struct FreeEnergyProfile {
    std::vector<double> volumes;
    std::vector<double> pressures;
    std::vector<double> free_energy;
    std::vector<double> density;  // exp(-beta F) normalised on the grid
};

FreeEnergyProfile thermodynamic_integration(std::span<const double> grid,
                                            std::span<const double> pressures, double p0,
                                            double beta);

/// Trapezoid L1 distance of two functions tabulated on the same grid.
double distribution_distance(std::span<const double> a, std::span<const double> b,
                             std::span<const double> grid);

/// Mean NVT pressure at each grid volume. Grid point i runs on its own stream.
std::vector<double> nvt_mean_pressures(const ExperimentConfig& config,
                                       std::span<const double> grid);

struct VirialRow {
    double p0 = 0.0;
    double mean_pressure = 0.0;
    double mean_pv = 0.0;
    double mean_volume = 0.0;
    VirialErrors errors;
    std::optional<FailureInfo> failure;
};

/// One trajectory per entry of config.p0_list, entry i on stream i.
std::vector<VirialRow> virial_table(const ExperimentConfig& config);

/// Calls task(i) for i in [0, count) on up to `threads` threads.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace npt
