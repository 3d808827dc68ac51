#include "npt/integrators.hpp"

#include <cmath>
#include <string>

namespace npt {

std::string_view scheme_name(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::EulerMaruyama: return "em";
        case SchemeKind::Trotter: return "trotter";
        case SchemeKind::ThirdsConsistent: return "thirds";
        case SchemeKind::SecondOrderSplitting: return "splitting2";
        case SchemeKind::ConstantVolumeNVT: return "nvt";
    }
    return "unknown";
}

SchemeKind parse_scheme(std::string_view name) {
    for (auto kind : {SchemeKind::EulerMaruyama, SchemeKind::Trotter, SchemeKind::ThirdsConsistent,
                      SchemeKind::SecondOrderSplitting, SchemeKind::ConstantVolumeNVT}) {
        if (scheme_name(kind) == name) return kind;
    }
    throw Error("unknown scheme '" + std::string(name) + "'");
}

std::size_t gaussians_per_step(SchemeKind kind, std::size_t n_particles) {
    const std::size_t d = 3 * n_particles;
    switch (kind) {
        case SchemeKind::SecondOrderSplitting:
        case SchemeKind::Trotter: return 2 * d + 1;
        case SchemeKind::EulerMaruyama: return d + 1;
        case SchemeKind::ThirdsConsistent: return d + 3;
        case SchemeKind::ConstantVolumeNVT: return 2 * d;
    }
    return 0;
}

void thermostat_half(std::span<Vec3> momenta, double dt, const PhysicalParams& params,
                     GaussianSource& noise) {
    for (std::size_t i = 0; i < momenta.size(); ++i) {
        const double g = params.particle_frictions[i];
        const double decay = std::exp(-0.5 * dt * g);
        // 1 - exp(-g dt), accurate for small g dt
        const double amplitude = std::sqrt(-std::expm1(-dt * g) * params.masses[i] / params.beta);
        for (std::size_t k = 0; k < 3; ++k) {
            const double z = noise.next();
            momenta[i][k] = decay * momenta[i][k] + amplitude * z;
        }
    }
}

void kick(SystemState& state, std::span<const Vec3> forces, double h) {
    for (std::size_t i = 0; i < state.size(); ++i) {
        state.momenta[i] += forces[i] * h;
    }
}

void kick_half(SystemState& state, const ForceFieldModel& field, double dt) {
    const auto out = evaluate(field, state);
    kick(state, out.forces, 0.5 * dt);
}

void drift(SystemState& state, const PhysicalParams& params, double h) {
    const double box = state.box_length();
    for (std::size_t i = 0; i < state.size(); ++i) {
        Vec3& r = state.positions[i];
        r += state.momenta[i] * (h / params.masses[i]);
        r.x = wrap_coordinate(r.x, box);
        r.y = wrap_coordinate(r.y, box);
        r.z = wrap_coordinate(r.z, box);
    }
}

void drift_half(SystemState& state, const PhysicalParams& params, double dt) {
    drift(state, params, 0.5 * dt);
}

void rescale_box(SystemState& state, double new_log_volume) {
    const double ratio = std::exp((new_log_volume - state.log_volume) / 3.0);
    const double inverse = std::exp((state.log_volume - new_log_volume) / 3.0);
    state.log_volume = new_log_volume;
    const double box = state.box_length();
    for (std::size_t i = 0; i < state.size(); ++i) {
        Vec3& r = state.positions[i];
        r *= ratio;
        r.x = wrap_coordinate(r.x, box);
        r.y = wrap_coordinate(r.y, box);
        r.z = wrap_coordinate(r.z, box);
        state.momenta[i] *= inverse;
    }
}

namespace {

const LambdaForm& require_lambda_form(const PhysicalParams& params) {
    const auto* lf = std::get_if<LambdaForm>(&params.volume_coupling);
    if (lf == nullptr) {
        throw Error("second-order splitting requires the lambda-form volume friction");
    }
    return *lf;
}

/// Copy of state with (s, p_s) held fixed and log-volume moved to eps.
SystemState rescaled_copy(const SystemState& state, double eps) {
    SystemState out = state;
    const double ratio = std::exp((eps - state.log_volume) / 3.0);
    const double inverse = std::exp((state.log_volume - eps) / 3.0);
    for (auto& r : out.positions) r *= ratio;
    for (auto& p : out.momenta) p *= inverse;
    out.log_volume = eps;
    return out;
}

std::string describe(const char* what, double v0, double v1) {
    return std::string(what) + " (V = " + std::to_string(v0) + " -> " + std::to_string(v1) + ")";
}

/// Euler-Maruyama update of V from the current state, shared by the first-order schemes.
double em_volume(const SystemState& state, const PhysicalParams& params, double virial_sum,
                 double dt, double brownian_increment) {
    const double v = state.volume();
    const double dH_dV = v_dH_dV(state, params, virial_sum) / v;
    const double v1 = v - dt * volume_drift(params, v, dH_dV) +
                      volume_diffusion(params, v) * brownian_increment;
    if (!(v1 > 0.0) || !std::isfinite(v1)) {
        throw StepFailure(describe("volume went nonpositive", v, v1), v, v1);
    }
    return v1;
}

template <class Forces>
void second_order_impl(SystemState& state, const ForceFieldModel& field,
                       const PhysicalParams& params, double dt, GaussianSource& noise,
                       Forces&& forces_at) {
    require_lambda_form(params);
    thermostat_half(state.momenta, dt, params, noise);
    kick(state, forces_at(state).forces, 0.5 * dt);
    drift_half(state, params, dt);
    barostat_full(state, field, params, dt, noise);
    drift_half(state, params, dt);
    kick(state, forces_at(state).forces, 0.5 * dt);
    thermostat_half(state.momenta, dt, params, noise);
    state.time += dt;
}

template <class Forces>
void em_impl(SystemState& state, const PhysicalParams& params, double dt, GaussianSource& noise,
             Forces&& forces_at) {
    const double z_volume = noise.next();
    const ForceFieldOutput& ff = forces_at(state);
    const double v = state.volume();
    const double v1 = em_volume(state, params, ff.virial_sum, dt, std::sqrt(dt) * z_volume);
    const double ratio = std::cbrt(v1 / v);
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double m = params.masses[i];
        const double g = params.particle_frictions[i];
        const double amplitude = std::sqrt(2.0 * dt * g * m / params.beta);
        Vec3& r = state.positions[i];
        Vec3& p = state.momenta[i];
        const Vec3 p0 = p;
        r = p0 * (dt / m) + r * ratio;
        Vec3 z;
        z.x = noise.next();
        z.y = noise.next();
        z.z = noise.next();
        p = ff.forces[i] * dt + p0 * (1.0 / ratio) - p0 * (g * dt) + z * amplitude;
    }
    state.log_volume = std::log(v1);
    wrap_positions(state);
    state.time += dt;
}

template <class Forces>
void trotter_impl(SystemState& state, const PhysicalParams& params, double dt,
                  GaussianSource& noise, Forces&& forces_at) {
    thermostat_half(state.momenta, dt, params, noise);
    const ForceFieldOutput& ff = forces_at(state);
    kick(state, ff.forces, 0.5 * dt);
    const double z_volume = noise.next();
    const double v1 = em_volume(state, params, ff.virial_sum, dt, std::sqrt(dt) * z_volume);
    drift_half(state, params, dt);
    rescale_box(state, std::log(v1));
    drift_half(state, params, dt);
    kick(state, forces_at(state).forces, 0.5 * dt);
    thermostat_half(state.momenta, dt, params, noise);
    state.time += dt;
}

template <class Forces>
void thirds_impl(SystemState& state, const PhysicalParams& params, double dt,
                 GaussianSource& noise, Forces&& forces_at) {
    const double third = std::sqrt(dt / 3.0);
    const double dw1 = third * noise.next();
    const double dw2 = third * noise.next();
    const double dw3 = third * noise.next();

    const ForceFieldOutput& ff = forces_at(state);
    const double v = state.volume();
    const double dH_dV = v_dH_dV(state, params, ff.virial_sum) / v;
    const double a = volume_drift(params, v, dH_dV);
    const double b = volume_diffusion(params, v);
    const double w12 = dw1 + dw2;
    const double w123 = w12 + dw3;
    const double v_r = v - (dt / 3.0) * a + b * dw1;
    const double v_p = v - (2.0 * dt / 3.0) * a + b * w12;
    const double v1 = v - dt * a + b * w123;
    for (double candidate : {v_r, v_p, v1}) {
        if (!(candidate > 0.0) || !std::isfinite(candidate)) {
            throw StepFailure(describe("volume went nonpositive", v, candidate), v, candidate);
        }
    }
    const double dv = v1 - v;
    const double r_factor = dv / (3.0 * v_r);
    const double p_factor = dv / (3.0 * v_p);
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double m = params.masses[i];
        const double g = params.particle_frictions[i];
        const double amplitude = std::sqrt(2.0 * dt * g * m / params.beta);
        Vec3& r = state.positions[i];
        Vec3& p = state.momenta[i];
        const Vec3 p0 = p;
        r = r + p0 * (dt / m) + r * r_factor;
        Vec3 z;
        z.x = noise.next();
        z.y = noise.next();
        z.z = noise.next();
        p = p0 + ff.forces[i] * dt - p0 * p_factor - p0 * (g * dt) + z * amplitude;
    }
    state.log_volume = std::log(v1);
    wrap_positions(state);
    state.time += dt;
}

template <class Forces>
void nvt_impl(SystemState& state, const PhysicalParams& params, double dt, GaussianSource& noise,
              Forces&& forces_at) {
    thermostat_half(state.momenta, dt, params, noise);
    kick(state, forces_at(state).forces, 0.5 * dt);
    drift(state, params, dt);
    kick(state, forces_at(state).forces, 0.5 * dt);
    thermostat_half(state.momenta, dt, params, noise);
    state.time += dt;
}

/// Fresh evaluation on every call, holding the latest result.
struct DirectForces {
    const ForceFieldModel& field;
    ForceFieldOutput last;
    const ForceFieldOutput& operator()(const SystemState& s) {
        last = evaluate(field, s);
        return last;
    }
};

}  // namespace

double volume_drift(const PhysicalParams& params, double volume, double dH_dV) {
    if (const auto* lf = std::get_if<LambdaForm>(&params.volume_coupling)) {
        // closed form, finite at lambda = 0
        return lf->lambda * volume * (volume * dH_dV - 2.0 / params.beta);
    }
    const double g = friction(params.volume_coupling, volume);
    const double dg = friction_derivative(params.volume_coupling, volume);
    return (dH_dV + dg / (params.beta * g)) / g;
}

double volume_diffusion(const PhysicalParams& params, double volume) {
    if (const auto* lf = std::get_if<LambdaForm>(&params.volume_coupling)) {
        return volume * std::sqrt(2.0 * lf->lambda / params.beta);
    }
    return std::sqrt(2.0 / (params.beta * friction(params.volume_coupling, volume)));
}

void barostat_full(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
                   double dt, GaussianSource& noise) {
    const double lambda = require_lambda_form(params).lambda;
    const double z = noise.next();
    const double kt = 1.0 / params.beta;
    const double eps = state.log_volume;
    const double noise_term = std::sqrt(2.0 * dt * lambda * kt) * z;

    const double g0 = v_dH_dV(state, params, energy_virial(field, state).virial_sum);
    const double eps_pred = eps - lambda * (g0 - kt) * dt + noise_term;
    double g1 = g0;
    if (std::isfinite(eps_pred)) {
        const SystemState predicted = rescaled_copy(state, eps_pred);
        g1 = v_dH_dV(predicted, params, energy_virial(field, predicted).virial_sum);
    }
    const double eps_next = eps - lambda * (g0 + g1 - 2.0 * kt) * (0.5 * dt) + noise_term;
    if (!std::isfinite(g0) || !std::isfinite(eps_pred) || !std::isfinite(g1) ||
        !std::isfinite(eps_next) || !std::isfinite(std::exp(eps_next))) {
        const std::string diag = "barostat produced a non-finite update (V dH/dV = " +
                                 std::to_string(g0) + ", predictor log V = " +
                                 std::to_string(eps_pred) + ", corrector V dH/dV = " +
                                 std::to_string(g1) + ")";
        throw StepFailure(diag, std::exp(eps), std::exp(eps_next));
    }
    rescale_box(state, eps_next);
}

void step_second_order(SystemState& state, const ForceFieldModel& field,
                       const PhysicalParams& params, double dt, GaussianSource& noise) {
    second_order_impl(state, field, params, dt, noise, DirectForces{field, {}});
}

void step_em(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
             double dt, GaussianSource& noise) {
    em_impl(state, params, dt, noise, DirectForces{field, {}});
}

void step_trotter(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
                  double dt, GaussianSource& noise) {
    trotter_impl(state, params, dt, noise, DirectForces{field, {}});
}

void step_thirds(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
                 double dt, GaussianSource& noise) {
    thirds_impl(state, params, dt, noise, DirectForces{field, {}});
}

void step_nvt(SystemState& state, const ForceFieldModel& field, const PhysicalParams& params,
              double dt, GaussianSource& noise) {
    nvt_impl(state, params, dt, noise, DirectForces{field, {}});
}

StepKernel::StepKernel(SchemeKind scheme, double dt, PhysicalParams params, ForceFieldModel field)
    : scheme_(scheme), dt_(dt), params_(std::move(params)), field_(std::move(field)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
        throw Error("Δt must be positive");
    }
    if (scheme_ == SchemeKind::SecondOrderSplitting) {
        require_lambda_form(params_);
    }
}

const ForceFieldOutput& StepKernel::forces_at(const SystemState& state) {
    if (const auto* hit = cached_output(state)) {
        return *hit;
    }
    cached_ = evaluate(field_, state);
    cached_positions_ = state.positions;
    cached_log_volume_ = state.log_volume;
    return *cached_;
}

const ForceFieldOutput* StepKernel::cached_output(const SystemState& state) const {
    if (cached_ && cached_log_volume_ == state.log_volume && cached_positions_ == state.positions) {
        return &*cached_;
    }
    return nullptr;
}

void StepKernel::advance(SystemState& state, GaussianSource& noise) {
    auto forces = [this](const SystemState& s) -> const ForceFieldOutput& { return forces_at(s); };
    switch (scheme_) {
        case SchemeKind::SecondOrderSplitting:
            second_order_impl(state, field_, params_, dt_, noise, forces);
            break;
        case SchemeKind::EulerMaruyama: em_impl(state, params_, dt_, noise, forces); break;
        case SchemeKind::Trotter: trotter_impl(state, params_, dt_, noise, forces); break;
        case SchemeKind::ThirdsConsistent: thirds_impl(state, params_, dt_, noise, forces); break;
        case SchemeKind::ConstantVolumeNVT: nvt_impl(state, params_, dt_, noise, forces); break;
    }
}

}  // namespace npt
