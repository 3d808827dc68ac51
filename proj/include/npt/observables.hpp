#pragma once

#include <cstddef>
#include <span>

#include "npt/core.hpp"
#include "npt/forcefield.hpp"

namespace npt {

struct ObservableRecord {
    double time = 0.0;
    double volume = 0.0;
    double density = 0.0;
    double pressure = 0.0;
    double kinetic = 0.0;
    double potential = 0.0;
    double enthalpy = 0.0;  // U + K + P0 V
    double pv = 0.0;

    friend bool operator==(const ObservableRecord&, const ObservableRecord&) = default;
};

ObservableRecord record(const SystemState& state, const ForceFieldModel& field,
                        const PhysicalParams& params);

/// Assembles a record from an already computed energy and virial for this state.
ObservableRecord record(const SystemState& state, const PhysicalParams& params, double energy,
                        double virial_sum);

/// Single-pass mean and central second moment (Welford), mergeable
/// (Chan et al.) for parallel reduction.
class StreamingMoments {
public:
    void add(double x);
    void merge(const StreamingMoments& other);

    std::size_t count() const { return count_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }
    /// Unbiased sample variance; zero below two samples.
    double variance() const;
    double standard_error() const;

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means.
double batch_means_standard_error(std::span<const double> series, std::size_t batches = 50);

struct VirialErrors {
    double e1 = 0.0;  // |<P> - P0| / P0
    double e2 = 0.0;  // beta |<PV> - P0 <V> + 1/beta|
};

VirialErrors virial_errors(double mean_pressure, double mean_pv, double mean_volume,
                           const PhysicalParams& params);

}  // namespace npt
