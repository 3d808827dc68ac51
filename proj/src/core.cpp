#include "npt/core.hpp"

#include <cstdio>
#include <string>

namespace npt {

SystemState::SystemState(std::vector<Vec3> r, std::vector<Vec3> p, double eps, double t)
    : positions(std::move(r)), momenta(std::move(p)), log_volume(eps), time(t) {}

void SystemState::validate() const {
    if (positions.empty()) {
        throw Error("state must hold at least one particle");
    }
    if (positions.size() != momenta.size()) {
        throw Error("positions and momenta differ in particle count");
    }
    if (!std::isfinite(log_volume) || !std::isfinite(time)) {
        throw Error("non-finite geometry");
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!is_finite(positions[i]) || !is_finite(momenta[i])) {
            throw Error("non-finite state at particle " + std::to_string(i));
        }
    }
}

namespace {

struct FrictionValue {
    double volume;
    double operator()(const LambdaForm& f) const { return 1.0 / (f.lambda * volume * volume); }
    double operator()(const CellRescaling& f) const { return f.tau_p / (f.beta_t * volume); }
    double operator()(const CustomFriction& f) const { return f.gamma(volume); }
};

struct FrictionSlope {
    double volume;
    double operator()(const LambdaForm& f) const {
        return -2.0 / (f.lambda * volume * volume * volume);
    }
    double operator()(const CellRescaling& f) const {
        return -f.tau_p / (f.beta_t * volume * volume);
    }
    double operator()(const CustomFriction& f) const { return f.derivative(volume); }
};

}  // namespace

double friction(const FrictionModel& model, double volume) {
    return std::visit(FrictionValue{volume}, model);
}

double friction_derivative(const FrictionModel& model, double volume) {
    return std::visit(FrictionSlope{volume}, model);
}

void validate_friction(const FrictionModel& model, std::span<const double> sample_volumes) {
    if (const auto* f = std::get_if<LambdaForm>(&model)) {
        if (!(f->lambda >= 0.0) || !std::isfinite(f->lambda)) {
            throw Error("lambda must be nonnegative");
        }
        // lambda = 0 freezes the volume; gamma is infinite there by construction
        if (f->lambda == 0.0) return;
    }
    if (const auto* f = std::get_if<CellRescaling>(&model);
        f && !(f->tau_p > 0.0 && f->beta_t > 0.0)) {
        throw Error("tau_p and beta_T must be positive");
    }
    if (const auto* f = std::get_if<CustomFriction>(&model); f && !(f->gamma && f->derivative)) {
        throw Error("custom friction needs both gamma(V) and its derivative");
    }
    for (double v : sample_volumes) {
        const double g = friction(model, v);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw Error("friction must be positive at V = " + std::to_string(v));
        }
        const double h = 1e-5 * v;
        const double fd = (friction(model, v + h) - friction(model, v - h)) / (2.0 * h);
        const double supplied = friction_derivative(model, v);
        const double scale = std::max(std::abs(fd), std::abs(g) / v);
        if (std::abs(supplied - fd) > 1e-6 * scale) {
            throw Error("friction derivative disagrees with finite difference at V = " +
                        std::to_string(v));
        }
    }
}

PhysicalParams PhysicalParams::uniform(std::size_t n, double beta, double pressure, double mass,
                                       double gamma, FrictionModel coupling) {
    PhysicalParams p;
    p.beta = beta;
    p.pressure = pressure;
    p.masses.assign(n, mass);
    p.particle_frictions.assign(n, gamma);
    p.volume_coupling = std::move(coupling);
    return p;
}

void PhysicalParams::validate(std::size_t n_particles) const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("beta must be positive");
    if (!(pressure > 0.0) || !std::isfinite(pressure)) throw Error("pressure must be positive");
    if (masses.size() != n_particles || particle_frictions.size() != n_particles) {
        throw Error("masses and frictions must have one entry per particle");
    }
    for (double m : masses) {
        if (!(m > 0.0)) throw Error("masses must be positive");
    }
    for (double g : particle_frictions) {
        if (!(g >= 0.0)) throw Error("particle frictions must be nonnegative");
    }
    const double probe[] = {0.5, 1.0, 10.0};
    validate_friction(volume_coupling, probe);
}

Vec3 minimum_image(const Vec3& displacement, double box_length) {
    if (!is_finite(displacement) || !std::isfinite(box_length)) {
        throw Error("non-finite geometry");
    }
    if (!(box_length > 0.0)) {
        throw Error("box length must be positive");
    }
    const double half = 0.5 * box_length;
    Vec3 out = displacement;
    for (std::size_t k = 0; k < 3; ++k) {
        double d = out[k];
        if (d >= -half && d < half) continue;
        d -= box_length * std::floor(d / box_length + 0.5);
        if (d >= half) d -= box_length;
        if (d < -half) d += box_length;
        out[k] = d;
    }
    return out;
}

double wrap_coordinate(double x, double box_length) {
    if (x >= 0.0 && x < box_length) return x;
    double w = x - box_length * std::floor(x / box_length);
    if (w >= box_length) w -= box_length;
    if (w < 0.0) w += box_length;
    // rounding can leave w == L after the correction above
    if (w >= box_length) w = 0.0;
    return w;
}

void wrap_positions(SystemState& state) {
    if (!std::isfinite(state.log_volume)) throw Error("non-finite geometry");
    const double box = state.box_length();
    for (auto& r : state.positions) {
        if (!is_finite(r)) throw Error("non-finite geometry");
        r.x = wrap_coordinate(r.x, box);
        r.y = wrap_coordinate(r.y, box);
        r.z = wrap_coordinate(r.z, box);
    }
}

ReducedCoordinates reduced_coordinates(const SystemState& state) {
    const double box = state.box_length();
    const double inv = 1.0 / box;
    ReducedCoordinates out;
    out.positions.reserve(state.size());
    out.momenta.reserve(state.size());
    for (const auto& r : state.positions) out.positions.push_back(r * inv);
    for (const auto& p : state.momenta) out.momenta.push_back(p * box);
    return out;
}

SystemState from_reduced(const ReducedCoordinates& reduced, double log_volume, double time) {
    const double box = std::exp(log_volume / 3.0);
    const double inv = 1.0 / box;
    SystemState s;
    s.log_volume = log_volume;
    s.time = time;
    s.positions.reserve(reduced.positions.size());
    s.momenta.reserve(reduced.momenta.size());
    for (const auto& r : reduced.positions) s.positions.push_back(r * box);
    for (const auto& p : reduced.momenta) s.momenta.push_back(p * inv);
    return s;
}

double kinetic_energy(const SystemState& state, const PhysicalParams& params) {
    double k = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        k += norm2(state.momenta[i]) / params.masses[i];
    }
    return 0.5 * k;
}

}  // namespace npt
