#include "npt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace npt {

PhysicalParams make_params(const ExperimentConfig& config) {
    FrictionModel coupling = LambdaForm{config.lambda};
    if (config.friction == FrictionKind::CellRescaling) {
        coupling = CellRescaling{config.tau_p, config.beta_t};
    }
    return PhysicalParams::uniform(config.n, config.beta, config.p0, config.mass, config.gamma,
                                   std::move(coupling));
}

ForceFieldModel make_field(const ExperimentConfig& config) {
    switch (config.field) {
        case FieldKind::Free: return FreeGas{};
        case FieldKind::Quartic: return QuarticBump{config.quartic_weight};
        case FieldKind::LennardJones: return LennardJones{config.lj_cutoff};
    }
    throw Error("unknown field");
}

double initial_volume(const ExperimentConfig& config) {
    if (config.volume0 > 0.0) return config.volume0;
    return static_cast<double>(config.n) / config.rho0;
}

std::vector<Vec3> lattice_positions(std::size_t n, double box_length) {
    std::size_t m = 1;
    while (m * m * m < n) ++m;
    const double a = box_length / static_cast<double>(m);
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < m && out.size() < n; ++i) {
        for (std::size_t j = 0; j < m && out.size() < n; ++j) {
            for (std::size_t k = 0; k < m && out.size() < n; ++k) {
                out.push_back({(static_cast<double>(i) + 0.5) * a, (static_cast<double>(j) + 0.5) * a,
                               (static_cast<double>(k) + 0.5) * a});
            }
        }
    }
    return out;
}

SystemState initial_state(const ExperimentConfig& config, GaussianSource& noise) {
    const double volume = initial_volume(config);
    if (!(volume > 0.0) || !std::isfinite(volume)) throw Error("initial volume must be positive");
    const double eps = std::log(volume);
    std::vector<Vec3> r = lattice_positions(config.n, std::exp(eps / 3.0));
    std::vector<Vec3> p(config.n);
    if (config.momenta == MomentumInit::Maxwell) {
        const double scale = std::sqrt(config.mass / config.beta);
        for (auto& pi : p) {
            pi.x = scale * noise.next();
            pi.y = scale * noise.next();
            pi.z = scale * noise.next();
        }
    }
    return SystemState(std::move(r), std::move(p), eps);
}

namespace {

bool finite_record(const ObservableRecord& rec) {
    return std::isfinite(rec.volume) && std::isfinite(rec.pressure) &&
           std::isfinite(rec.kinetic) && std::isfinite(rec.potential);
}

ObservableRecord kernel_record(const StepKernel& kernel, const SystemState& state) {
    if (const auto* out = kernel.cached_output(state)) {
        return record(state, kernel.params(), out->energy, out->virial_sum);
    }
    return record(state, kernel.field(), kernel.params());
}

}  // namespace

RunSummary run_trajectory(const ExperimentConfig& config, const RecordSink& sink,
                          std::uint64_t stream_id) {
    validate(config);
    NoiseStream noise(config.seed, stream_id);
    RunSummary summary;
    summary.final_state = initial_state(config, noise);
    SystemState& state = summary.final_state;
    StepKernel kernel(config.scheme, config.dt, make_params(config), make_field(config));

    for (std::uint64_t k = 1; k <= config.steps; ++k) {
        const double v_before = state.volume();
        try {
            kernel.advance(state, noise);
        } catch (const StepFailure& f) {
            summary.failure = FailureInfo{k, f.what(), f.volume_before(), f.attempted_volume()};
            return summary;
        }
        summary.steps_completed = k;
        if (!sink || k <= config.burn_in || (k - config.burn_in) % config.stride != 0) continue;
        const ObservableRecord rec = kernel_record(kernel, state);
        if (!finite_record(rec)) {
            summary.failure = FailureInfo{k, "non-finite observable", v_before, rec.volume};
            return summary;
        }
        sink(k, rec);
    }
    return summary;
}

ObservableSeries run_trajectory(const ExperimentConfig& config, std::uint64_t stream_id) {
    ObservableSeries series;
    const auto summary = run_trajectory(
        config,
        [&](std::uint64_t step, const ObservableRecord& rec) {
            series.steps.push_back(step);
            series.records.push_back(rec);
        },
        stream_id);
    series.failure = summary.failure;
    return series;
}

TrajectoryMoments trajectory_moments(const ExperimentConfig& config, std::uint64_t stream_id) {
    TrajectoryMoments m;
    const auto summary = run_trajectory(
        config,
        [&](std::uint64_t, const ObservableRecord& rec) {
            m.volume.add(rec.volume);
            m.volume_sq.add(rec.volume * rec.volume);
            m.pressure.add(rec.pressure);
            m.pv.add(rec.pv);
        },
        stream_id);
    m.failure = summary.failure;
    return m;
}

std::string_view test_function_name(TestFunction phi) {
    switch (phi) {
        case TestFunction::Volume: return "V";
        case TestFunction::VolumeSquared: return "V2";
        case TestFunction::ExpSqrtVolume: return "exp_sqrt_V";
        case TestFunction::Pressure: return "P";
        case TestFunction::Density: return "rho";
        case TestFunction::SqrtVolumeExp: return "sqrtV_exp_sqrt_V";
    }
    return "unknown";
}

TestFunction parse_test_function(std::string_view name) {
    for (auto phi : {TestFunction::Volume, TestFunction::VolumeSquared, TestFunction::ExpSqrtVolume,
                     TestFunction::Pressure, TestFunction::Density, TestFunction::SqrtVolumeExp}) {
        if (test_function_name(phi) == name) return phi;
    }
    throw Error("unknown test function '" + std::string(name) + "'");
}

std::vector<TestFunction> parse_test_functions(std::span<const std::string> names) {
    std::vector<TestFunction> out;
    for (const auto& name : names) out.push_back(parse_test_function(name));
    return out;
}

double evaluate(TestFunction phi, const SystemState& state, const ForceFieldModel& field,
                const PhysicalParams& params) {
    const double v = state.volume();
    switch (phi) {
        case TestFunction::Volume: return v;
        case TestFunction::VolumeSquared: return v * v;
        case TestFunction::ExpSqrtVolume: return std::exp(-std::sqrt(v));
        case TestFunction::Pressure: return instantaneous_pressure(field, state, params);
        case TestFunction::Density: return static_cast<double>(state.size()) / v;
        case TestFunction::SqrtVolumeExp: return std::sqrt(v) * std::exp(-std::sqrt(v));
    }
    return 0.0;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

/// Means and standard errors over successful replicas, reduced in replica
/// order so the result does not depend on the thread count.
void reduce_replicas(const std::vector<std::vector<double>>& values, std::size_t n_functions,
                     std::vector<double>& means, std::vector<double>* errors,
                     std::size_t& failures) {
    std::vector<StreamingMoments> acc(n_functions);
    failures = 0;
    for (const auto& row : values) {
        if (row.empty()) {
            ++failures;
            continue;
        }
        for (std::size_t f = 0; f < n_functions; ++f) acc[f].add(row[f]);
    }
    means.assign(n_functions, std::nan(""));
    if (errors) errors->assign(n_functions, std::nan(""));
    for (std::size_t f = 0; f < n_functions; ++f) {
        if (acc[f].count() == 0) continue;
        means[f] = acc[f].mean();
        if (errors) (*errors)[f] = acc[f].standard_error();
    }
}

}  // namespace

TerminalEnsemble replicate_terminal(const ExperimentConfig& config,
                                    std::span<const TestFunction> functions) {
    validate(config);
    TerminalEnsemble out;
    out.functions.assign(functions.begin(), functions.end());
    out.values.assign(config.replicas, {});
    const auto params = make_params(config);
    const auto field = make_field(config);
    parallel_for(config.replicas, config.threads, [&](std::size_t k) {
        const auto summary = run_trajectory(config, RecordSink{}, k);
        if (summary.failure) return;
        std::vector<double> row;
        for (auto phi : functions) row.push_back(evaluate(phi, summary.final_state, field, params));
        out.values[k] = std::move(row);
    });
    reduce_replicas(out.values, functions.size(), out.means, &out.standard_errors, out.failures);
    return out;
}

WeakOrderFit weak_order_fit(std::span<const double> dts, std::span<const double> errors) {
    if (dts.size() != errors.size()) throw Error("weak-order fit needs one error per step size");
    if (dts.size() < 3) throw Error("weak-order fit needs at least three step sizes");
    WeakOrderFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i]) || !(dts[i] > 0.0)) {
            fit.excluded.push_back(i);
            continue;
        }
        xs.push_back(std::log2(dts[i]));
        ys.push_back(std::log2(errors[i]));
    }
    if (xs.size() < 2) throw Error("weak-order fit has fewer than two positive errors");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw Error("weak-order fit needs distinct step sizes");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

namespace {

bool has_ou_halves(SchemeKind s) {
    return s == SchemeKind::SecondOrderSplitting || s == SchemeKind::Trotter ||
           s == SchemeKind::ConstantVolumeNVT;
}

bool has_volume_noise(SchemeKind s) { return s != SchemeKind::ConstantVolumeNVT; }

std::uint64_t steps_for(double t_end, int level) {
    const double steps = std::ldexp(t_end, level);
    const double rounded = std::round(steps);
    if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * steps) {
        throw Error("t_end must be a whole number of steps at every level");
    }
    return static_cast<std::uint64_t>(rounded);
}

/// Gaussians for one coarse step assembled from a fine Brownian path.
/// Fine momentum increments have spacing dt_ref / 2 for schemes with
/// Ornstein-Uhlenbeck half-steps and dt_ref otherwise; fine volume
/// increments have spacing dt_ref / 3 for the thirds scheme and dt_ref
/// otherwise. Every fine increment is stored as a standard normal.
class CoarseNoiseBuilder {
public:
    CoarseNoiseBuilder(SchemeKind scheme, std::size_t n_particles, const PhysicalParams& params,
                       double dt_ref, std::uint64_t ratio)
        : scheme_(scheme), dim_(3 * n_particles), ratio_(ratio) {
        if (has_ou_halves(scheme)) {
            // the OU half-step integral weights each fine increment by
            // exp(-gamma (t_end - t_mid)); normalising gives a unit normal
            const double h_fine = 0.5 * dt_ref;
            weights_.resize(n_particles);
            norms_.resize(n_particles);
            for (std::size_t i = 0; i < n_particles; ++i) {
                const double g = params.particle_frictions[i];
                double s = 0.0;
                for (std::uint64_t j = 0; j < ratio; ++j) {
                    const double age = (static_cast<double>(ratio - j) - 0.5) * h_fine;
                    const double w = std::exp(-g * age);
                    weights_[i].push_back(w);
                    s += w * w;
                }
                norms_[i] = 1.0 / std::sqrt(s);
            }
        }
    }

    /// Coarse step `s`; xi_w holds fine momentum normals row-major by fine
    /// index, xi_v the fine volume normals.
    void build(std::uint64_t s, const std::vector<double>& xi_w, const std::vector<double>& xi_v,
               std::vector<double>& out) const {
        out.clear();
        const double inv_sqrt_ratio = 1.0 / std::sqrt(static_cast<double>(ratio_));
        auto volume_sum = [&](std::uint64_t first, std::uint64_t count) {
            double acc = 0.0;
            for (std::uint64_t j = first; j < first + count; ++j) acc += xi_v[j];
            return acc * inv_sqrt_ratio;
        };
        auto ou_half = [&](std::uint64_t first) {
            for (std::size_t c = 0; c < dim_; ++c) {
                const std::size_t i = c / 3;
                double acc = 0.0;
                for (std::uint64_t j = 0; j < ratio_; ++j) {
                    acc += weights_[i][j] * xi_w[(first + j) * dim_ + c];
                }
                out.push_back(acc * norms_[i]);
            }
        };
        auto brownian = [&](std::uint64_t first) {
            for (std::size_t c = 0; c < dim_; ++c) {
                double acc = 0.0;
                for (std::uint64_t j = 0; j < ratio_; ++j) acc += xi_w[(first + j) * dim_ + c];
                out.push_back(acc * inv_sqrt_ratio);
            }
        };
        switch (scheme_) {
            case SchemeKind::SecondOrderSplitting:
            case SchemeKind::Trotter:
                ou_half(2 * s * ratio_);
                out.push_back(volume_sum(s * ratio_, ratio_));
                ou_half(2 * s * ratio_ + ratio_);
                break;
            case SchemeKind::ConstantVolumeNVT:
                ou_half(2 * s * ratio_);
                ou_half(2 * s * ratio_ + ratio_);
                break;
            case SchemeKind::EulerMaruyama:
                out.push_back(volume_sum(s * ratio_, ratio_));
                brownian(s * ratio_);
                break;
            case SchemeKind::ThirdsConsistent:
                for (std::uint64_t part = 0; part < 3; ++part) {
                    out.push_back(volume_sum(3 * s * ratio_ + part * ratio_, ratio_));
                }
                brownian(s * ratio_);
                break;
        }
    }

private:
    SchemeKind scheme_;
    std::size_t dim_;
    std::uint64_t ratio_;
    std::vector<std::vector<double>> weights_;
    std::vector<double> norms_;
};

std::vector<int> all_levels(const ExperimentConfig& config) {
    std::vector<int> levels;
    for (int l = config.level_min; l <= config.level_max; ++l) levels.push_back(l);
    levels.push_back(config.level_ref);
    return levels;
}

}  // namespace

ConvergenceReport run_convergence(const ExperimentConfig& config) {
    validate(config);
    ConvergenceReport report;
    report.functions = parse_test_functions(config.observables);
    const auto params = make_params(config);
    const auto field = make_field(config);
    const auto levels = all_levels(config);
    const std::size_t n_levels = levels.size();
    const std::size_t n_fun = report.functions.size();
    const std::uint64_t ref_steps = steps_for(config.t_end, config.level_ref);
    for (int l : levels) steps_for(config.t_end, l);

    // values[level][replica][function]
    std::vector<std::vector<std::vector<double>>> values(
        n_levels, std::vector<std::vector<double>>(config.replicas));

    auto terminal = [&](const SystemState& s) {
        std::vector<double> row;
        for (auto phi : report.functions) row.push_back(evaluate(phi, s, field, params));
        return row;
    };

    if (config.coupling == NoiseCoupling::Independent) {
        parallel_for(config.replicas * n_levels, config.threads, [&](std::size_t job) {
            const std::size_t li = job / config.replicas;
            const std::size_t k = job % config.replicas;
            ExperimentConfig c = config;
            c.dt = std::ldexp(1.0, -levels[li]);
            c.steps = steps_for(config.t_end, levels[li]);
            c.burn_in = 0;
            const std::uint64_t stream = (static_cast<std::uint64_t>(li + 1) << 40) | k;
            const auto summary = run_trajectory(c, RecordSink{}, stream);
            if (!summary.failure) values[li][k] = terminal(summary.final_state);
        });
    } else {
        const std::size_t dim = 3 * config.n;
        const std::uint64_t fine_w = ref_steps * (has_ou_halves(config.scheme) ? 2 : 1);
        const std::uint64_t fine_v =
            has_volume_noise(config.scheme)
                ? ref_steps * (config.scheme == SchemeKind::ThirdsConsistent ? 3 : 1)
                : 0;
        const double dt_ref = std::ldexp(1.0, -config.level_ref);
        std::vector<CoarseNoiseBuilder> builders;
        for (int l : levels) {
            builders.emplace_back(config.scheme, config.n, params, dt_ref,
                                  std::uint64_t{1} << (config.level_ref - l));
        }
        parallel_for(config.replicas, config.threads, [&](std::size_t k) {
            NoiseStream noise(config.seed, k);
            const SystemState start = initial_state(config, noise);
            std::vector<double> xi_v(fine_v), xi_w(fine_w * dim), draws;
            noise.fill(xi_v);
            noise.fill(xi_w);
            ReplayNoise replay;
            for (std::size_t li = 0; li < n_levels; ++li) {
                const double dt = std::ldexp(1.0, -levels[li]);
                const std::uint64_t steps = steps_for(config.t_end, levels[li]);
                StepKernel kernel(config.scheme, dt, params, field);
                SystemState state = start;
                bool failed = false;
                for (std::uint64_t s = 0; s < steps && !failed; ++s) {
                    builders[li].build(s, xi_w, xi_v, replay.buffer());
                    replay.rewind();
                    try {
                        kernel.advance(state, replay);
                    } catch (const StepFailure&) {
                        failed = true;
                    }
                }
                if (!failed) values[li][k] = terminal(state);
            }
        });
    }

    for (std::size_t li = 0; li < n_levels; ++li) {
        ConvergenceLevel lvl;
        lvl.level = levels[li];
        lvl.dt = std::ldexp(1.0, -levels[li]);
        reduce_replicas(values[li], n_fun, lvl.means, nullptr, lvl.failures);
        if (li + 1 == n_levels) {
            report.reference = std::move(lvl);
        } else {
            report.levels.push_back(std::move(lvl));
        }
    }
    const bool paired = config.coupling == NoiseCoupling::Brownian;
    for (std::size_t li = 0; li + 1 < n_levels; ++li) {
        auto& lvl = report.levels[li];
        for (std::size_t f = 0; f < n_fun; ++f) {
            const double ref = report.reference.means[f];
            lvl.errors.push_back(std::abs(lvl.means[f] - ref) / std::abs(ref));
            StreamingMoments diff, coarse, fine;
            for (std::size_t k = 0; k < config.replicas; ++k) {
                const auto& a = values[li][k];
                const auto& b = values[n_levels - 1][k];
                if (!a.empty()) coarse.add(a[f]);
                if (!b.empty()) fine.add(b[f]);
                if (!a.empty() && !b.empty()) diff.add(a[f] - b[f]);
            }
            const double se = paired ? diff.standard_error()
                                     : std::hypot(coarse.standard_error(), fine.standard_error());
            lvl.error_se.push_back(se / std::abs(ref));
        }
    }
    std::vector<double> dts;
    for (const auto& lvl : report.levels) dts.push_back(lvl.dt);
    for (std::size_t f = 0; f < n_fun; ++f) {
        std::vector<double> errs;
        for (const auto& lvl : report.levels) errs.push_back(lvl.errors[f]);
        report.fits.push_back(report.levels.size() >= 3 ? weak_order_fit(dts, errs)
                                                        : WeakOrderFit{});
    }
    return report;
}

double exact_free_gas_density(double volume, std::size_t n, double beta, double p0) {
    if (!(volume > 0.0)) throw Error("free-gas density needs V > 0");
    const double nn = static_cast<double>(n);
    const double a = beta * p0;
    const double log_rho = (nn + 1.0) * std::log(a) - std::lgamma(nn + 1.0) +
                           (n == 0 ? 0.0 : nn * std::log(volume)) - a * volume;
    return std::exp(log_rho);
}

std::vector<double> Histogram::centers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < counts.size(); ++i) out.push_back(center(i));
    return out;
}

Histogram histogram(std::span<const double> samples, double lo, double hi, std::size_t bins,
                    bool allow_outside) {
    if (samples.empty()) throw Error("histogram of an empty sample");
    if (bins == 0) throw Error("histogram needs at least one bin");
    for (double x : samples) {
        if (!std::isfinite(x)) throw Error("histogram sample is not finite");
    }
    Histogram h;
    if (lo == hi) {
        const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
        lo = *mn;
        hi = *mx;
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    if (!(hi > lo)) throw Error("histogram range must be increasing");
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    const double width = h.width();
    for (double x : samples) {
        if (x < lo || x > hi) {
            if (!allow_outside) throw Error("sample outside histogram range");
            ++h.outside;
            continue;
        }
        auto b = static_cast<std::size_t>((x - lo) / width);
        if (b >= bins) b = bins - 1;
        ++h.counts[b];
    }
    h.total = samples.size();
    h.density.resize(bins);
    const double scale = 1.0 / (static_cast<double>(h.total) * width);
    for (std::size_t i = 0; i < bins; ++i) h.density[i] = static_cast<double>(h.counts[i]) * scale;
    return h;
}

double histogram_l1(const Histogram& h, const std::function<double(double)>& density) {
    double sum = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        sum += std::abs(h.density[i] - density(h.center(i)));
    }
    return sum * h.width();
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
    if (points < 2 || !(hi > lo)) throw Error("grid needs two or more increasing points");
    std::vector<double> g(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
    g.back() = hi;
    return g;
}

double trapezoid(std::span<const double> values, std::span<const double> grid) {
    if (values.size() != grid.size()) throw Error("grid mismatch");
    double sum = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        sum += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    }
    return sum;
}

std::vector<double> normalize_on_grid(std::span<const double> values,
                                      std::span<const double> grid) {
    const double z = trapezoid(values, grid);
    if (!(z > 0.0) || !std::isfinite(z)) throw Error("cannot normalise a density with zero mass");
    std::vector<double> out(values.begin(), values.end());
    for (auto& v : out) v /= z;
    return out;
}

namespace {

void require_increasing(std::span<const double> grid) {
    if (grid.size() < 2) throw Error("grid needs at least two points");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw Error("volume grid must be strictly increasing");
    }
}

}  // namespace

FreeEnergyProfile thermodynamic_integration(std::span<const double> grid,
                                            std::span<const double> pressures, double p0,
                                            double beta) {
    require_increasing(grid);
    if (pressures.size() != grid.size()) throw Error("one pressure per grid volume required");
    FreeEnergyProfile out;
    out.volumes.assign(grid.begin(), grid.end());
    out.pressures.assign(pressures.begin(), pressures.end());
    out.free_energy.assign(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        out.free_energy[i] = out.free_energy[i - 1] - 0.5 *
                                                          (pressures[i - 1] + pressures[i] - 2.0 * p0) *
                                                          (grid[i] - grid[i - 1]);
    }
    const double f_min = *std::min_element(out.free_energy.begin(), out.free_energy.end());
    std::vector<double> weight(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        weight[i] = std::exp(-beta * (out.free_energy[i] - f_min));
    }
    out.density = normalize_on_grid(weight, grid);
    return out;
}

double distribution_distance(std::span<const double> a, std::span<const double> b,
                             std::span<const double> grid) {
    if (a.size() != grid.size() || b.size() != grid.size()) throw Error("grid mismatch");
    std::vector<double> diff(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) diff[i] = std::abs(a[i] - b[i]);
    return trapezoid(diff, grid);
}

std::vector<double> nvt_mean_pressures(const ExperimentConfig& config,
                                       std::span<const double> grid) {
    require_increasing(grid);
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), config.threads, [&](std::size_t i) {
        ExperimentConfig c = config;
        c.scheme = SchemeKind::ConstantVolumeNVT;
        c.volume0 = grid[i];
        c.steps = config.nvt_steps;
        c.burn_in = config.nvt_burn_in;
        c.stride = 1;
        const auto m = trajectory_moments(c, i);
        if (m.failure) {
            throw Error("NVT run at V = " + std::to_string(grid[i]) + " failed: " +
                        m.failure->message);
        }
        out[i] = m.pressure.mean();
    });
    return out;
}

std::vector<VirialRow> virial_table(const ExperimentConfig& config) {
    std::vector<VirialRow> rows(config.p0_list.size());
    parallel_for(rows.size(), config.threads, [&](std::size_t i) {
        ExperimentConfig c = config;
        c.p0 = config.p0_list[i];
        const auto m = trajectory_moments(c, i);
        VirialRow& row = rows[i];
        row.p0 = c.p0;
        row.failure = m.failure;
        row.mean_pressure = m.pressure.mean();
        row.mean_pv = m.pv.mean();
        row.mean_volume = m.volume.mean();
        row.errors = virial_errors(row.mean_pressure, row.mean_pv, row.mean_volume, make_params(c));
    });
    return rows;
}

}  // namespace npt
