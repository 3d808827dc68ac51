#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "npt/core.hpp"
#include "npt/forcefield.hpp"
#include "npt/noise.hpp"

namespace npt {

enum class SchemeKind {
    EulerMaruyama,         // first-order scheme I
    Trotter,               // first-order operator splitting
    ThirdsConsistent,      // first-order scheme II, V* at thirds
    SecondOrderSplitting,  // positive-volume second-order sampler
    ConstantVolumeNVT,
};

std::string_view scheme_name(SchemeKind kind);
SchemeKind parse_scheme(std::string_view name);

/// Gaussian draws consumed by one step, in order:
///   SecondOrderSplitting, Trotter: 3N thermostat, 1 volume, 3N thermostat
///   EulerMaruyama:                 1 volume, 3N momentum
///   ThirdsConsistent:              3 volume sub-increments, 3N momentum
///   ConstantVolumeNVT:             3N thermostat, 3N thermostat
std::size_t gaussians_per_step(SchemeKind kind, std::size_t n_particles);

/// Raised when a step cannot produce a valid state. The state passed to the
/// step is left unspecified.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, double volume_before, double attempted_volume)
        : Error(what), volume_before_(volume_before), attempted_volume_(attempted_volume) {}

    double volume_before() const { return volume_before_; }
    double attempted_volume() const { return attempted_volume_; }

private:
    double volume_before_;
    double attempted_volume_;
};

// Substeps. Each one mutates the state in place.

/// Exact Ornstein-Uhlenbeck update over dt/2 for every momentum component.
void thermostat_half(std::span<Vec3> momenta, double dt, const PhysicalParams& params,
                     GaussianSource& noise);

void kick(SystemState& state, std::span<const Vec3> forces, double h);
void kick_half(SystemState& state, const ForceFieldModel& field, double dt);

/// r <- wrap(r + m^-1 p h).
void drift(SystemState& state, const PhysicalParams& params, double h);
void drift_half(SystemState& state, const PhysicalParams& params, double dt);

/// Rescales r by L'/L and p by L/L', then wraps.
void rescale_box(SystemState& state, double new_log_volume);

/// Predictor-corrector update of epsilon = log V with fixed reduced
/// coordinates, followed by the matching rescaling of r and p. Requires
/// LambdaForm coupling. Draws one Gaussian.
void barostat_full(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
                   double dt, GaussianSource& noise);

/// Euler-Maruyama volume drift per unit time for an arbitrary friction:
/// (1/gamma) [dH/dV + (beta gamma)^-1 dgamma/dV].
double volume_drift(const PhysicalParams& params, double volume, double dH_dV);
/// sqrt(2 / (beta gamma(V))).
double volume_diffusion(const PhysicalParams& params, double volume);

void step_second_order(SystemState& state, const ForceFieldModel& field,
                       const PhysicalParams& params, double dt, GaussianSource& noise);
void step_em(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
             double dt, GaussianSource& noise);
void step_trotter(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
                  double dt, GaussianSource& noise);
void step_thirds(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
                 double dt, GaussianSource& noise);
void step_nvt(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
              double dt, GaussianSource& noise);

/// Owns one trajectory's scheme, parameters and force cache. Steps are
/// bitwise identical to the free step functions above; the cache only skips
/// re-evaluating forces at unchanged positions and volume.
class StepKernel {
public:
    StepKernel(SchemeKind scheme, double dt, PhysicalParams params, ForceFieldModel field);

    void advance(SystemState& state, GaussianSource& noise);

    SchemeKind scheme() const { return scheme_; }
    double dt() const { return dt_; }
    const PhysicalParams& params() const { return params_; }
    const ForceFieldModel& field() const { return field_; }

    /// Field output at the state left by the last advance(), if it is still
    /// valid for that state's positions and volume.
    const ForceFieldOutput* cached_output(const SystemState& state) const;

private:
    const ForceFieldOutput& forces_at(const SystemState& state);

    SchemeKind scheme_;
    double dt_;
    PhysicalParams params_;
    ForceFieldModel field_;

    std::vector<Vec3> cached_positions_;
    double cached_log_volume_ = 0.0;
    std::optional<ForceFieldOutput> cached_;
};

}  // namespace npt
