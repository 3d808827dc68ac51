#include "npt/forcefield.hpp"

#include <cmath>

namespace npt {

namespace {

inline double nearest_component(double d, double box, double half) {
    if (d >= -half && d < half) return d;
    if (d >= half && d < half + box) return d - box;
    if (d < -half && d >= -half - box) return d + box;
    d -= box * std::floor(d / box + 0.5);
    if (d >= half) d -= box;
    if (d < -half) d += box;
    return d;
}

inline Vec3 nearest_image(const Vec3& d, double box) {
    const double half = 0.5 * box;
    return {nearest_component(d.x, box, half), nearest_component(d.y, box, half),
            nearest_component(d.z, box, half)};
}

/// Value and radial slope Phi'(r)/r of one pair term at squared distance r2.
struct PairTerm {
    double phi;
    double slope_over_r;
};

inline PairTerm lj_term(double r2) {
    const double inv2 = 1.0 / r2;
    const double inv6 = inv2 * inv2 * inv2;
    return {4.0 * (inv6 * inv6 - inv6), -24.0 * (2.0 * inv6 * inv6 - inv6) * inv2};
}

inline PairTerm quartic_term(double r2, double w2) {
    const double denom = 1.0 + r2 * r2;
    return {w2 / denom, -4.0 * w2 * r2 / (denom * denom)};
}

/// Visits every interacting (i, j, d_ij) of the field's pair list.
template <class Visit>
void for_each_pair_term(const ForceFieldModel& field, const SystemState& state, Visit&& visit) {
    const std::size_t n = state.size();
    const double box = state.box_length();
    const auto& r = state.positions;

    if (std::holds_alternative<FreeGas>(field)) {
        return;
    }
    if (const auto* lj = std::get_if<LennardJones>(&field)) {
        const double rc = lj_cutoff(*lj, box);
        const double rc2 = rc * rc;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const Vec3 d = nearest_image(r[i] - r[j], box);
                const double r2 = norm2(d);
                if (r2 > rc2) continue;
                if (!(r2 > 0.0)) {
                    throw Error("singular pair distance");
                }
                visit(i, j, d, lj_term(r2));
            }
        }
        return;
    }
    const auto& quartic = std::get<QuarticBump>(field);
    const double w2 = quartic.weight * quartic.weight;
    const auto& shifts = quartic_image_shifts();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec3 d0 = nearest_image(r[i] - r[j], box);
            for (const auto& shift : shifts) {
                const Vec3 d = d0 + shift * box;
                visit(i, j, d, quartic_term(norm2(d), w2));
            }
        }
    }
}

}  // namespace

std::string_view field_name(const ForceFieldModel& field) {
    switch (field.index()) {
        case 0: return "free";
        case 1: return "quartic";
        default: return "lj";
    }
}

const std::array<Vec3, 7>& quartic_image_shifts() {
    static const std::array<Vec3, 7> shifts = {
        Vec3{0, 0, 0},  Vec3{1, 0, 0},  Vec3{-1, 0, 0}, Vec3{0, 1, 0},
        Vec3{0, -1, 0}, Vec3{0, 0, 1},  Vec3{0, 0, -1}};
    return shifts;
}

double lj_cutoff(const LennardJones& lj, double box_length) {
    return std::max(0.5 * box_length, lj.min_cutoff);
}

double pair_potential(const ForceFieldModel& field, double r) {
    if (std::holds_alternative<FreeGas>(field)) return 0.0;
    if (std::holds_alternative<LennardJones>(field)) {
        if (!(r > 0.0)) throw Error("singular pair distance");
        return lj_term(r * r).phi;
    }
    if (!(r >= 0.0)) throw Error("pair distance must be nonnegative");
    const double w = std::get<QuarticBump>(field).weight;
    return quartic_term(r * r, w * w).phi;
}

ForceFieldOutput evaluate(const ForceFieldModel& field, const SystemState& state) {
    ForceFieldOutput out;
    out.forces.assign(state.size(), Vec3{});
    for_each_pair_term(field, state,
                       [&](std::size_t i, std::size_t j, const Vec3& d, const PairTerm& t) {
                           out.energy += t.phi;
                           out.virial_sum += t.slope_over_r * norm2(d);
                           const Vec3 f = d * (-t.slope_over_r);
                           out.forces[i] += f;
                           out.forces[j] -= f;
                       });
    return out;
}

EnergyVirial energy_virial(const ForceFieldModel& field, const SystemState& state) {
    EnergyVirial out;
    for_each_pair_term(field, state,
                       [&](std::size_t, std::size_t, const Vec3& d, const PairTerm& t) {
                           out.energy += t.phi;
                           out.virial_sum += t.slope_over_r * norm2(d);
                       });
    return out;
}

double instantaneous_pressure(const SystemState& state, const PhysicalParams& params,
                              double virial_sum) {
    const double two_k = 2.0 * kinetic_energy(state, params);
    return (two_k - virial_sum) / (3.0 * state.volume());
}

double instantaneous_pressure(const ForceFieldModel& field, const SystemState& state,
                              const PhysicalParams& params) {
    return instantaneous_pressure(state, params, energy_virial(field, state).virial_sum);
}

double v_dH_dV(const SystemState& state, const PhysicalParams& params, double virial_sum) {
    const double k = kinetic_energy(state, params);
    return params.pressure * state.volume() + virial_sum / 3.0 - 2.0 * k / 3.0;
}

double v_dH_dV(const ForceFieldModel& field, const SystemState& state,
               const PhysicalParams& params) {
    return v_dH_dV(state, params, energy_virial(field, state).virial_sum);
}

}  // namespace npt
