#include "npt/config.hpp"

#include <cmath>
#include <string>

namespace npt {

namespace {

template <class Enum, std::size_t K>
Enum parse_named(std::string_view name, const Enum (&values)[K],
                 std::string_view (*namer)(Enum), const char* what) {
    for (Enum v : values) {
        if (namer(v) == name) return v;
    }
    throw Error(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

void require(bool ok, const char* message) {
    if (!ok) throw Error(message);
}

bool positive(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

std::string_view field_kind_name(FieldKind kind) {
    switch (kind) {
        case FieldKind::Free: return "free";
        case FieldKind::Quartic: return "quartic";
        case FieldKind::LennardJones: return "lj";
    }
    return "unknown";
}

FieldKind parse_field_kind(std::string_view name) {
    static const FieldKind all[] = {FieldKind::Free, FieldKind::Quartic, FieldKind::LennardJones};
    return parse_named(name, all, field_kind_name, "field");
}

std::string_view friction_kind_name(FrictionKind kind) {
    return kind == FrictionKind::Lambda ? "lambda" : "rescaling";
}

FrictionKind parse_friction_kind(std::string_view name) {
    static const FrictionKind all[] = {FrictionKind::Lambda, FrictionKind::CellRescaling};
    return parse_named(name, all, friction_kind_name, "friction");
}

std::string_view momentum_init_name(MomentumInit kind) {
    return kind == MomentumInit::Maxwell ? "maxwell" : "zero";
}

MomentumInit parse_momentum_init(std::string_view name) {
    static const MomentumInit all[] = {MomentumInit::Maxwell, MomentumInit::Zero};
    return parse_named(name, all, momentum_init_name, "momentum initialisation");
}

std::string_view coupling_name(NoiseCoupling kind) {
    return kind == NoiseCoupling::Brownian ? "brownian" : "independent";
}

NoiseCoupling parse_coupling(std::string_view name) {
    static const NoiseCoupling all[] = {NoiseCoupling::Brownian, NoiseCoupling::Independent};
    return parse_named(name, all, coupling_name, "coupling");
}

void validate(const ExperimentConfig& c) {
    require(positive(c.dt), "Δt must be positive");
    require(c.n >= 1, "N must be at least 1");
    require(c.steps >= 1, "steps must be at least 1");
    require(c.replicas >= 1, "replicas must be at least 1");
    require(c.stride >= 1, "stride must be at least 1");
    require(c.burn_in < c.steps, "burn_in must be smaller than steps");
    require(positive(c.beta), "beta must be positive");
    require(positive(c.p0), "p0 must be positive");
    require(positive(c.mass), "mass must be positive");
    require(c.gamma >= 0.0 && std::isfinite(c.gamma), "gamma must be nonnegative");
    require(c.lambda >= 0.0 && std::isfinite(c.lambda), "lambda must be nonnegative");
    require(positive(c.tau_p) && positive(c.beta_t), "tau_p and beta_t must be positive");
    require(positive(c.quartic_weight) || c.quartic_weight == 0.0,
            "quartic_weight must be nonnegative");
    require(positive(c.lj_cutoff), "lj_cutoff must be positive");
    require(positive(c.rho0), "rho0 must be positive");
    require(c.volume0 >= 0.0 && std::isfinite(c.volume0), "volume0 must be nonnegative");
    require(positive(c.t_end), "t_end must be positive");
    require(c.threads >= 1, "threads must be at least 1");
    require(c.level_min >= 0 && c.level_min <= c.level_max && c.level_max < c.level_ref &&
                c.level_ref <= 30,
            "levels must satisfy 0 <= level_min <= level_max < level_ref <= 30");
    require(!c.observables.empty(), "observables must not be empty");
    require(!c.p0_list.empty(), "p0_list must not be empty");
    for (double p : c.p0_list) require(positive(p), "p0_list entries must be positive");
    require(c.bins >= 1, "bins must be at least 1");
    require(c.hist_max >= c.hist_min, "hist_max must not be below hist_min");
    require(positive(c.ti_vmin) && c.ti_vmax > c.ti_vmin, "TI volume range must be increasing");
    require(c.ti_points >= 2, "ti_points must be at least 2");
    require(c.nvt_steps > c.nvt_burn_in, "nvt_steps must exceed nvt_burn_in");
    if (c.scheme == SchemeKind::SecondOrderSplitting) {
        require(c.friction == FrictionKind::Lambda,
                "second-order splitting requires the lambda-form volume friction");
    }
}

}  // namespace npt
