#pragma once

#include <array>
#include <string_view>
#include <variant>
#include <vector>

#include "npt/core.hpp"

namespace npt {

/// No interactions.
struct FreeGas {};

/// Phi(r) = w^2 / (1 + r^4) summed over the nearest image and its six
/// face-sharing neighbours.
struct QuarticBump {
    double weight = 1.0;
};

/// 4 (r^-12 - r^-6) on the minimum image, dropped beyond max(L/2, min_cutoff).
struct LennardJones {
    double min_cutoff = 2.5;
};

using ForceFieldModel = std::variant<FreeGas, QuarticBump, LennardJones>;

std::string_view field_name(const ForceFieldModel& field);

/// Integer shifts used for the quartic image sum: the origin and the six unit vectors.
const std::array<Vec3, 7>& quartic_image_shifts();

double lj_cutoff(const LennardJones& lj, double box_length);

/// Pair energy at distance r (the quartic value includes the w^2 weight).
double pair_potential(const ForceFieldModel& field, double r);

struct ForceFieldOutput {
    double energy = 0.0;
    std::vector<Vec3> forces;
    /// sum over pairs and images of grad Phi(d) . d
    double virial_sum = 0.0;
};

/// Energy, forces and virial from one O(N^2) pass.
ForceFieldOutput evaluate(const ForceFieldModel& field, const SystemState& state);

struct EnergyVirial {
    double energy = 0.0;
    double virial_sum = 0.0;
};

/// Same pair list as evaluate(), without accumulating forces.
EnergyVirial energy_virial(const ForceFieldModel& field, const SystemState& state);

/// P = (p^T m^-1 p - virial_sum) / (3V).
double instantaneous_pressure(const SystemState& state, const PhysicalParams& params,
                              double virial_sum);
double instantaneous_pressure(const ForceFieldModel& field, const SystemState& state,
                              const PhysicalParams& params);

/// V dH/dV at fixed reduced coordinates: P0 V + virial_sum / 3 - 2K / 3,
/// which equals V (P0 - P).
double v_dH_dV(const SystemState& state, const PhysicalParams& params, double virial_sum);
double v_dH_dV(const ForceFieldModel& field, const SystemState& state,
               const PhysicalParams& params);

}  // namespace npt
