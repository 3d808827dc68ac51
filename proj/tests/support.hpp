#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include <cmath>
#include <random>
#include <vector>

#include "npt/core.hpp"
#include "npt/forcefield.hpp"

namespace npt::testing {

inline SystemState single_particle(Vec3 r, Vec3 p, double volume) {
    return SystemState({r}, {p}, std::log(volume));
}

/// Random positions in [0, L)^3 with every minimum-image pair distance at
/// least `min_distance` and, when `avoid` > 0, no distance within `avoid`
/// of `shell` and no component within `avoid` of L/2.
inline SystemState random_state(std::mt19937_64& rng, std::size_t n, double volume,
                                double min_distance, double shell = 0.0, double avoid = 0.0,
                                double momentum_scale = 1.0) {
    const double box = std::cbrt(volume);
    std::uniform_real_distribution<double> u(0.0, box);
    std::normal_distribution<double> g(0.0, momentum_scale);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<Vec3> r(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = {u(rng), u(rng), u(rng)};
            p[i] = {g(rng), g(rng), g(rng)};
        }
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = i + 1; j < n && ok; ++j) {
                const Vec3 d = minimum_image(r[j] - r[i], box);
                const double dist = std::sqrt(norm2(d));
                if (dist < min_distance) ok = false;
                if (avoid > 0.0) {
                    if (std::abs(dist - shell) < avoid) ok = false;
                    for (int k = 0; k < 3; ++k) {
                        if (std::abs(std::abs(d[k]) - 0.5 * box) < avoid) ok = false;
                    }
                }
            }
        }
        if (ok) return SystemState(std::move(r), std::move(p), std::log(volume));
    }
    throw Error("could not place particles");
}

/// Brute-force truncated LJ energy: componentwise rounding to the nearest
/// image, written independently of the library kernel.
inline double oracle_lj_energy(const SystemState& s, double min_cutoff = 2.5) {
    const double box = s.box_length();
    const double rc = std::max(0.5 * box, min_cutoff);
    double u = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            double r2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                double d = s.positions[j][k] - s.positions[i][k];
                d -= box * std::round(d / box);
                r2 += d * d;
            }
            if (r2 > rc * rc) continue;
            const double inv6 = 1.0 / (r2 * r2 * r2);
            u += 4.0 * (inv6 * inv6 - inv6);
        }
    }
    return u;
}

/// Brute-force quartic energy over the seven images around the nearest one.
inline double oracle_quartic_energy(const SystemState& s, double w) {
    const double box = s.box_length();
    const int shifts[7][3] = {{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                              {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    double u = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            double d0[3];
            for (int k = 0; k < 3; ++k) {
                d0[k] = s.positions[j][k] - s.positions[i][k];
                d0[k] -= box * std::round(d0[k] / box);
            }
            for (const auto& n : shifts) {
                double r2 = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const double d = d0[k] + box * n[k];
                    r2 += d * d;
                }
                u += w * w / (1.0 + r2 * r2);
            }
        }
    }
    return u;
}

/// Five-point central difference of -dU/dr_ik, truncation error O(h^4).
inline double five_point_force(const ForceFieldModel& field, const SystemState& s, std::size_t i, int k,
                               double h = 1e-4) {
    auto energy = [&](double shift) {
        SystemState t = s;
        t.positions[i][k] += shift;
        return energy_virial(field, t).energy;
    };
    return -(8.0 * (energy(h) - energy(-h)) - (energy(2.0 * h) - energy(-2.0 * h))) / (12.0 * h);
}

/// Energy as a function of the log-volume at fixed reduced coordinates.
inline double energy_at_volume(const ForceFieldModel& field, const SystemState& s, double volume) {
    SystemState t = s;
    const double ratio = std::cbrt(volume / s.volume());
    for (auto& r : t.positions) r *= ratio;
    t.log_volume = std::log(volume);
    return energy_virial(field, t).energy;
}

}  // namespace npt::testing
