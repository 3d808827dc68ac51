#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace npt {

/// Base error for everything the library reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline bool is_finite(const Vec3& a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Phase-space point of one replica. The volume variable is epsilon = log V,
/// so V = exp(epsilon) is positive whenever epsilon is finite.
struct SystemState {
    std::vector<Vec3> positions;
    std::vector<Vec3> momenta;
    double log_volume = 0.0;
    double time = 0.0;

    SystemState() = default;
    SystemState(std::vector<Vec3> r, std::vector<Vec3> p, double eps, double t = 0.0);

    std::size_t size() const { return positions.size(); }
    double volume() const { return std::exp(log_volume); }
    double box_length() const { return std::exp(log_volume / 3.0); }

    /// Throws unless the particle counts match, N >= 1 and every entry is finite.
    void validate() const;

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// gamma(V) = 1 / (lambda V^2): additive noise in log-volume.
struct LambdaForm {
    double lambda = 1.0;
};

/// gamma(V) = tau_p / (beta_T V): stochastic cell rescaling.
struct CellRescaling {
    double tau_p = 1.0;
    double beta_t = 1.0;
};

struct CustomFriction {
    std::function<double(double)> gamma;
    std::function<double(double)> derivative;
};

using FrictionModel = std::variant<LambdaForm, CellRescaling, CustomFriction>;

double friction(const FrictionModel& model, double volume);
double friction_derivative(const FrictionModel& model, double volume);

/// Checks gamma(V) > 0 and compares the supplied derivative to a central
/// difference at each sample volume (relative tolerance 1e-6).
void validate_friction(const FrictionModel& model, std::span<const double> sample_volumes);

struct PhysicalParams {
    double beta = 1.0;
    double pressure = 1.0;
    std::vector<double> masses;
    std::vector<double> particle_frictions;
    FrictionModel volume_coupling = LambdaForm{};

    /// Equal masses and frictions for n particles.
    static PhysicalParams uniform(std::size_t n, double beta, double pressure, double mass,
                                  double gamma, FrictionModel coupling = LambdaForm{});

    void validate(std::size_t n_particles) const;
};

/// Returns input + L n* with n* the componentwise nearest integer shift, so
/// every component lands in [-L/2, L/2).
Vec3 minimum_image(const Vec3& displacement, double box_length);

/// Maps x into [0, L).
double wrap_coordinate(double x, double box_length);

void wrap_positions(SystemState& state);

struct ReducedCoordinates {
    std::vector<Vec3> positions;  // s = V^{-1/3} r
    std::vector<Vec3> momenta;    // p_s = V^{1/3} p
};

ReducedCoordinates reduced_coordinates(const SystemState& state);
SystemState from_reduced(const ReducedCoordinates& reduced, double log_volume, double time = 0.0);

double kinetic_energy(const SystemState& state, const PhysicalParams& params);

}  // namespace npt
