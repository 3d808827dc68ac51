#include "npt/observables.hpp"

#include <cmath>

namespace npt {

ObservableRecord record(const SystemState& state, const PhysicalParams& params, double energy,
                        double virial_sum) {
    ObservableRecord rec;
    rec.time = state.time;
    rec.volume = state.volume();
    rec.density = static_cast<double>(state.size()) / rec.volume;
    rec.kinetic = kinetic_energy(state, params);
    rec.potential = energy;
    rec.pressure = (2.0 * rec.kinetic - virial_sum) / (3.0 * rec.volume);
    rec.enthalpy = rec.potential + rec.kinetic + params.pressure * rec.volume;
    rec.pv = rec.pressure * rec.volume;
    return rec;
}

ObservableRecord record(const SystemState& state, const ForceFieldModel& field,
                        const PhysicalParams& params) {
    const auto ev = energy_virial(field, state);
    return record(state, params, ev.energy, ev.virial_sum);
}

void StreamingMoments::add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
}

void StreamingMoments::merge(const StreamingMoments& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    mean_ = (na * mean_ + nb * other.mean_) / n;
    m2_ += other.m2_ + delta * delta * na * nb / n;
    count_ += other.count_;
}

double StreamingMoments::variance() const {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
}

double StreamingMoments::standard_error() const {
    return count_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count_));
}

double batch_means_standard_error(std::span<const double> series, std::size_t batches) {
    if (batches < 2 || series.size() < 2 * batches) {
        throw Error("series too short for batch means");
    }
    const std::size_t width = series.size() / batches;
    StreamingMoments means;
    for (std::size_t b = 0; b < batches; ++b) {
        double sum = 0.0;
        for (std::size_t i = b * width; i < (b + 1) * width; ++i) sum += series[i];
        means.add(sum / static_cast<double>(width));
    }
    return means.standard_error();
}

VirialErrors virial_errors(double mean_pressure, double mean_pv, double mean_volume,
                           const PhysicalParams& params) {
    const double p0 = params.pressure;
    const double beta = params.beta;
    return {std::abs(mean_pressure - p0) / p0,
            beta * std::abs(mean_pv - p0 * mean_volume + 1.0 / beta)};
}

}  // namespace npt
