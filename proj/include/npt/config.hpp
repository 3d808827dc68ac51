#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "npt/integrators.hpp"

namespace npt {

enum class FieldKind { Free, Quartic, LennardJones };
enum class FrictionKind { Lambda, CellRescaling };
enum class MomentumInit { Maxwell, Zero };
enum class NoiseCoupling { Brownian, Independent };

std::string_view field_kind_name(FieldKind kind);
FieldKind parse_field_kind(std::string_view name);
std::string_view friction_kind_name(FrictionKind kind);
FrictionKind parse_friction_kind(std::string_view name);
std::string_view momentum_init_name(MomentumInit kind);
MomentumInit parse_momentum_init(std::string_view name);
std::string_view coupling_name(NoiseCoupling kind);
NoiseCoupling parse_coupling(std::string_view name);

/// Declarative description of one experiment. Every field maps one-to-one
/// onto a config key and a command-line flag of the same name.
struct ExperimentConfig {
    SchemeKind scheme = SchemeKind::SecondOrderSplitting;
    FieldKind field = FieldKind::Free;
    double quartic_weight = 1.0;
    double lj_cutoff = 2.5;

    std::size_t n = 1;
    double beta = 1.0;
    double p0 = 1.0;
    double mass = 1.0;
    double gamma = 1.0;

    FrictionKind friction = FrictionKind::Lambda;
    double lambda = 1.0;
    double tau_p = 1.0;
    double beta_t = 1.0;

    double dt = 1e-3;
    std::uint64_t steps = 10000;
    std::uint64_t burn_in = 0;
    std::uint64_t stride = 1;
    double t_end = 1.0;

    std::uint64_t replicas = 1;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    double rho0 = 0.5;
    double volume0 = 0.0;  // overrides rho0 when positive
    MomentumInit momenta = MomentumInit::Maxwell;

    int level_min = 5;
    int level_max = 9;
    int level_ref = 11;
    NoiseCoupling coupling = NoiseCoupling::Brownian;
    std::vector<std::string> observables = {"V", "V2", "exp_sqrt_V"};

    std::vector<double> p0_list = {0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};

    std::size_t bins = 100;
    double hist_min = 0.0;
    double hist_max = 0.0;  // equal bounds: use the sample range

    double ti_vmin = 10.0;
    double ti_vmax = 60.0;
    std::size_t ti_points = 51;
    std::uint64_t nvt_steps = 100000;
    std::uint64_t nvt_burn_in = 10000;
    bool ti_analytic = false;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws npt::Error on the first violated constraint.
void validate(const ExperimentConfig& config);

}  // namespace npt
