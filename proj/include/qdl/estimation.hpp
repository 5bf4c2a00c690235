#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qdl/diff.hpp"
#include "qdl/parallel.hpp"
#include "qdl/spin_star.hpp"

namespace qdl {

template <class T>
DensityMatrix<T> cast_density(const DensityMatrix<double>& rho) {
    return DensityMatrix<T>::unchecked(cast_matrix<T>(rho.matrix()));
}

// ---------------------------------------------------------------------------
// Model parameterizations: how a flat theta vector becomes a GeneratorSet.
// ---------------------------------------------------------------------------

// Weak-measurement test system H = Omega sigma_x, c = sqrt(gamma) sigma_z,
// efficiency eta. theta = [Omega, gamma_amplitude, eta_raw]; the physical
// rate is amplitude^2 and eta = logistic(eta_raw), so all three coordinates
// are unconstrained.
struct SmeModel {
    TimeGrid grid;
    DensityMatrix<double> rho0 = ground_state<double>();

    template <class T>
    GeneratorSet<T> generators(const std::vector<T>& theta) const {
        if (theta.size() != 3) throw DimensionError("SmeModel expects 3 parameters");
        GeneratorSet<T> gen;
        gen.ham.h = cast_matrix<T>(pauli(Pauli::X));
        gen.ham.h *= theta[0];
        gen.channels.push_back({Pauli::Z, theta[1], true});
        gen.eta.raw = theta[2];
        return gen;
    }

    struct Physical {
        double omega, gamma, eta;
    };
    static Physical physical(const std::vector<double>& theta) {
        return {std::fabs(theta[0]), theta[1] * theta[1], logistic(theta[2])};
    }
    static std::vector<double> pack(double omega, double gamma, double eta) {
        return {omega, std::sqrt(gamma), std::log(eta / (1.0 - eta))};
    }
    static ParameterVector parameter_names(const std::vector<double>& theta) {
        return {theta, {"omega", "gamma_amplitude", "eta_raw"}};
    }
};

// Qubit with known energy gap and drives, unknown dissipation. kernel_length
// == 0 trains plain Lindblad rates (theta = one amplitude per channel);
// kernel_length L >= 1 trains a discretized memory kernel (theta = L weights
// per channel, channel-major).
struct KernelModel {
    double omega0 = 1.0;
    double dt = 0.02; // model grid step; dtau of the kernel equals this
    double t_max = 8.0;
    std::vector<Pauli> bases{Pauli::Minus};
    int kernel_length = 0;

    EvolutionMode mode() const {
        return kernel_length > 0 ? EvolutionMode::NZ : EvolutionMode::Lindblad;
    }
    std::size_t n_parameters() const {
        return bases.size() * (kernel_length > 0 ? kernel_length : 1);
    }
    int n_steps() const { return static_cast<int>(std::lround(t_max / dt)); }
    TimeGrid grid() const { return TimeGrid(0.0, dt, n_steps()); }

    template <class T>
    GeneratorSet<T> generators(const std::vector<T>& theta) const {
        if (theta.size() != n_parameters())
            throw DimensionError("KernelModel parameter count mismatch");
        GeneratorSet<T> gen;
        gen.ham.h = cast_matrix<T>(pauli(Pauli::Z) * (0.5 * omega0));
        gen.ham.couplings.push_back(cast_matrix<T>(pauli(Pauli::X)));
        gen.ham.couplings.push_back(cast_matrix<T>(pauli(Pauli::Y)));
        if (kernel_length > 0) {
            MemoryKernel<T> kernel;
            kernel.dtau = dt;
            kernel.length = kernel_length;
            for (std::size_t m = 0; m < bases.size(); ++m) {
                gen.channels.push_back({bases[m], T(1.0), false});
                kernel.weights.emplace_back(theta.begin() + m * kernel_length,
                                            theta.begin() + (m + 1) * kernel_length);
            }
            gen.kernel = std::move(kernel);
        } else {
            for (std::size_t m = 0; m < bases.size(); ++m)
                gen.channels.push_back({bases[m], theta[m], false});
        }
        return gen;
    }
};

inline std::vector<Pauli> parse_channel_set(const std::string& csv) {
    std::vector<Pauli> out;
    std::string tok;
    for (std::size_t i = 0; i <= csv.size(); ++i) {
        if (i == csv.size() || csv[i] == ',') {
            if (!tok.empty()) out.push_back(pauli_from_name(tok));
            tok.clear();
        } else {
            tok += csv[i];
        }
    }
    if (out.empty()) throw ConfigError("empty channel set");
    return out;
}

inline std::string channel_set_name(const std::vector<Pauli>& set) {
    std::string s;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (i) s += ",";
        s += pauli_name(set[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Cost functions
// ---------------------------------------------------------------------------

// (1/S) sum_i d(bit_i, p_i), d = squared difference. p_i is the Born
// probability of the excited outcome read from the record-driven
// reconstruction; each shot can only ever be sampled once, so the final
// projective bit is all the data there is.
template <class T>
T cost_weak(const SmeModel& model, const std::vector<T>& theta,
            const std::vector<TrajectoryRecord>& records, int n_threads = 1) {
    if (records.empty()) throw ConfigError("cost_weak: empty dataset");
    const GeneratorSet<T> gen = model.generators(theta);
    const DensityMatrix<T> rho0 = cast_density<T>(model.rho0);

    std::vector<T> terms(records.size());
    parallel_for(records.size(), n_threads, [&](std::size_t i) {
        try {
            const DensityMatrix<T> fin =
                sme_reconstruct_final(gen, model.grid, records[i].record, rho0);
            T diff = fin.excited_population() - static_cast<double>(records[i].final_bit);
            terms[i] = diff * diff;
        } catch (const Error& e) {
            throw NumericError(std::string(e.what()) + " (record " + std::to_string(i) + ")");
        }
    });
    T acc(0.0);
    for (const T& t : terms) acc += t;
    return acc / static_cast<double>(records.size());
}

// (1/S)(1/T) sum_ij d(p_ij_data, p_ij_model): mean squared error of the
// excited population across trajectories and sampling durations. The reported
// infidelity is sqrt of this.
template <class T>
T cost_population(const KernelModel& model, const std::vector<T>& theta,
                  const PopulationDataset& ds, int n_threads = 1) {
    if (ds.trajectories.empty()) throw ConfigError("cost_population: empty dataset");
    const GeneratorSet<T> gen = model.generators(theta);
    const DensityMatrix<T> rho0 = cast_density<T>(ground_state<double>());
    const TimeGrid grid = model.grid();
    const EvolutionMode mode = model.mode();

    // map sample times onto the model grid once
    std::vector<std::vector<int>> sample_steps(ds.trajectories.size());
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        for (double tj : ds.trajectories[i].times) {
            const int nj = static_cast<int>(std::lround(tj / grid.dt));
            if (nj < 0 || nj > grid.n_steps || std::fabs(nj * grid.dt - tj) > 1e-9)
                throw ConfigError("sample time " + std::to_string(tj) +
                                  " does not land on the model grid");
            sample_steps[i].push_back(nj);
        }
    }

    std::vector<T> terms(ds.trajectories.size());
    std::size_t n_samples_total = 0;
    for (const auto& tr : ds.trajectories) n_samples_total += tr.times.size();

    parallel_for(ds.trajectories.size(), n_threads, [&](std::size_t i) {
        const PopulationTrajectory& tr = ds.trajectories[i];
        T acc(0.0);
        std::size_t next = 0;
        propagate_observe(gen, grid, rho0, tr.schedule, mode,
                          [&](int step, const DensityMatrix<T>& state) {
                              while (next < sample_steps[i].size() &&
                                     sample_steps[i][next] == step) {
                                  T diff = state.excited_population() - tr.populations[next];
                                  fma_add(acc, diff, diff);
                                  ++next;
                              }
                          });
        if (next != sample_steps[i].size())
            throw ConfigError("sample times beyond the model horizon");
        terms[i] = std::move(acc);
    });
    T acc(0.0);
    for (const T& t : terms) acc += t;
    return acc / static_cast<double>(n_samples_total);
}

// ---------------------------------------------------------------------------
// Adam and the training loop
// ---------------------------------------------------------------------------

struct AdamHyper {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    std::vector<double> theta;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step_count = 0;
    AdamHyper hyper;

    explicit OptimizerState(std::vector<double> theta0, AdamHyper h = {})
        : theta(std::move(theta0)),
          first_moment(theta.size(), 0.0),
          second_moment(theta.size(), 0.0),
          hyper(h) {}
};

inline void adam_step(OptimizerState& s, const std::vector<double>& gradient) {
    if (gradient.size() != s.theta.size())
        throw DimensionError("adam_step: gradient length mismatch");
    for (double g : gradient)
        if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
    s.step_count += 1;
    const double b1 = s.hyper.beta1, b2 = s.hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(s.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(s.step_count));
    for (std::size_t k = 0; k < s.theta.size(); ++k) {
        s.first_moment[k] = b1 * s.first_moment[k] + (1.0 - b1) * gradient[k];
        s.second_moment[k] = b2 * s.second_moment[k] + (1.0 - b2) * gradient[k] * gradient[k];
        const double mhat = s.first_moment[k] / bc1;
        const double vhat = s.second_moment[k] / bc2;
        s.theta[k] -= s.hyper.lr * mhat / (std::sqrt(vhat) + s.hyper.eps);
    }
}

struct TrainBudget {
    int max_steps = 5000;
    double tolerance = 1e-9; // plateau threshold on |delta cost|
    int plateau_window = 50;
    double grad_clip = 10.0; // elementwise, before Adam
    AdamHyper adam;
};

struct TrainResult {
    std::vector<double> final_theta;
    double final_cost = 0.0;
    std::vector<double> cost_history;
    bool diverged = false;
    long steps = 0;
    std::uint64_t seed = 0;
};

// Full-batch gradient descent through the differentiable solvers. CostFn maps
// a lifted parameter vector to a DiffScalar; its partials are the gradient.
template <class CostFn>
TrainResult train(const CostFn& cost, std::vector<double> init, const TrainBudget& budget,
                  const std::function<void(long, const OptimizerState&, double)>& on_step = {}) {
    if (budget.max_steps < 1) throw ConfigError("train: max_steps must be >= 1");
    OptimizerState state(std::move(init), budget.adam);
    TrainResult res;
    res.final_theta = state.theta;
    const std::size_t P = state.theta.size();
    try {
        for (int it = 0; it < budget.max_steps; ++it) {
            const DiffScalar c = cost(lift(state.theta));
            if (!std::isfinite(c.v)) throw NumericError("non-finite cost");
            res.cost_history.push_back(c.v);
            res.final_cost = c.v;
            res.final_theta = state.theta;
            if (on_step) on_step(state.step_count, state, c.v);

            std::vector<double> grad(P, 0.0);
            for (std::size_t k = 0; k < c.d.size() && k < P; ++k) grad[k] = c.d[k];
            for (double& g : grad) g = std::clamp(g, -budget.grad_clip, budget.grad_clip);
            adam_step(state, grad);
            res.steps = state.step_count;

            const std::size_t h = res.cost_history.size();
            if (static_cast<int>(h) > budget.plateau_window &&
                std::fabs(res.cost_history[h - 1 - budget.plateau_window] -
                          res.cost_history[h - 1]) < budget.tolerance)
                break;
        }
    } catch (const NumericError&) {
        res.diverged = true;
        return res;
    }
    // cost at the final iterate; a blow-up on the very last step still counts
    // as divergence but keeps the last good point
    try {
        const DiffScalar c = cost(lift(state.theta));
        if (!std::isfinite(c.v)) throw NumericError("non-finite final cost");
        res.final_theta = state.theta;
        res.final_cost = c.v;
        res.cost_history.push_back(c.v);
    } catch (const NumericError&) {
        res.diverged = true;
    }
    return res;
}

struct SwarmRun {
    std::uint64_t seed = 0;
    TrainResult result;
};

struct SwarmResult {
    std::vector<SwarmRun> runs;
    int best = -1; // index of minimal final cost among runs that finished

    const TrainResult& best_result() const {
        if (best < 0) throw SwarmError("no successful run in swarm");
        return runs[best].result;
    }
};

// Independent multi-start optimizations. InitFn(seed) -> initial theta; run
// seeds derive from the master seed so the whole swarm is reproducible.
// Individual run failures are recorded, not fatal; a swarm whose every run
// diverged surfaces as SwarmError when its best result is read.
template <class CostFn, class InitFn>
SwarmResult swarm_train(int n_runs, const InitFn& init_for_seed, const CostFn& cost,
                        const TrainBudget& budget, std::uint64_t master_seed) {
    if (n_runs < 1) throw ConfigError("swarm_train: n_runs must be >= 1");
    SwarmResult out;
    out.runs.resize(n_runs);
    for (int r = 0; r < n_runs; ++r) {
        const std::uint64_t seed = derive_seed(master_seed, 0x5aa0 + r);
        out.runs[r].seed = seed;
        out.runs[r].result = train(cost, init_for_seed(seed), budget);
        out.runs[r].result.seed = seed;
    }
    for (int r = 0; r < n_runs; ++r) {
        const TrainResult& tr = out.runs[r].result;
        if (tr.diverged) continue;
        if (out.best < 0 || tr.final_cost < out.runs[out.best].result.final_cost)
            out.best = r;
    }
    return out;
}

// Multiplicative log-normal jitter for swarm initializations around a
// physics-informed base point.
inline std::vector<double> jitter_init(const std::vector<double>& base, double sigma,
                                       std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out = base;
    for (double& x : out) x *= rng.lognormal(sigma);
    return out;
}

// ---------------------------------------------------------------------------
// Experiment-level helpers
// ---------------------------------------------------------------------------

// RMSE of reconstructed excited populations against the withheld truth,
// averaged over the whole duration of every record. Parameters whose
// reconstruction blows up on a record score infinity.
inline double sme_validation_rmse(const SmeModel& model, const std::vector<double>& theta,
                                  const SmeDataset& validation, int n_threads = 1) {
    if (validation.records.empty()) throw ConfigError("empty validation set");
    const GeneratorSet<double> gen = model.generators(theta);
    std::vector<double> sq(validation.records.size(), 0.0);
    parallel_for(validation.records.size(), n_threads, [&](std::size_t i) {
        const auto& truth = validation.truth_populations[i];
        double acc = 0.0;
        std::size_t count = 0;
        try {
            sme_reconstruct_observe(gen, model.grid, validation.records[i].record,
                                    model.rho0,
                                    [&](int step, const DensityMatrix<double>& st) {
                                        const double d =
                                            st.excited_population() - truth[step];
                                        acc += d * d;
                                        ++count;
                                    });
            sq[i] = acc / static_cast<double>(count);
        } catch (const NumericError&) {
            sq[i] = std::numeric_limits<double>::infinity();
        }
    });
    double total = 0.0;
    for (double s : sq) total += s;
    return std::sqrt(total / static_cast<double>(sq.size()));
}

inline double population_rmse(const KernelModel& model, const std::vector<double>& theta,
                              const PopulationDataset& ds, int n_threads = 1) {
    return std::sqrt(value(cost_population(model, theta, ds, n_threads)));
}

// Quick single-channel sigma_minus Lindblad fit; its rate anchors the
// physics-informed kernel initializations.
inline double rough_lindblad_rate(const PopulationDataset& ds, double dt, double t_max,
                                  int n_threads = 1, int max_steps = 200) {
    KernelModel probe;
    probe.omega0 = ds.omega0;
    probe.dt = dt;
    probe.t_max = t_max;
    probe.bases = {Pauli::Minus};
    probe.kernel_length = 0;
    TrainBudget budget;
    budget.max_steps = max_steps;
    auto cost = [&](const std::vector<DiffScalar>& th) {
        return cost_population(probe, th, ds, n_threads);
    };
    const TrainResult res = train(cost, {0.3}, budget);
    const double amp = res.diverged ? 0.3 : res.final_theta[0];
    return amp * amp;
}

// Kernel initialization: small uniform weights with the sigma_minus lag-0
// entry anchored near the rough Lindblad rate.
inline std::vector<double> kernel_init(const KernelModel& model, double lindblad_rate,
                                       std::uint64_t seed) {
    Rng rng(seed);
    const int L = model.kernel_length;
    if (L == 0) {
        // Lindblad amplitudes around the rough fit
        std::vector<double> th(model.bases.size());
        for (double& a : th) a = std::sqrt(lindblad_rate) * rng.lognormal(0.5);
        return th;
    }
    std::vector<double> th(model.n_parameters());
    const double hi = 0.1 / (model.dt * L);
    for (double& w : th) w = rng.uniform(0.0, hi);
    for (std::size_t m = 0; m < model.bases.size(); ++m)
        if (model.bases[m] == Pauli::Minus)
            th[m * L] = lindblad_rate / model.dt * rng.lognormal(0.5);
    return th;
}

struct SweepRow {
    int kernel_length = 0; // 0 = Lindblad baseline
    std::string channel_set;
    std::uint64_t run_seed = 0;
    double train_rmse = 0.0;
    double final_rmse = 0.0; // on the validation set
    bool diverged = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;

    double best_rmse(const std::string& channel_set, int length) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : rows)
            if (!r.diverged && r.channel_set == channel_set && r.kernel_length == length)
                best = std::min(best, r.final_rmse);
        return best;
    }
    double best_rmse_any_length(const std::string& channel_set) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : rows)
            if (!r.diverged && r.channel_set == channel_set && r.kernel_length > 0)
                best = std::min(best, r.final_rmse);
        return best;
    }
};

// Swarm-trained models over every (channel set, kernel length) combination,
// kernel_length 0 rows being the Lindblad baseline of the same channel set.
inline SweepResult kernel_length_sweep(const PopulationDataset& train_ds,
                                       const PopulationDataset& val_ds,
                                       const std::vector<std::vector<Pauli>>& channel_sets,
                                       const std::vector<int>& lengths, double model_dt,
                                       int swarm_runs, const TrainBudget& budget,
                                       std::uint64_t master_seed, int n_threads = 1) {
    if (lengths.empty() || channel_sets.empty())
        throw ConfigError("sweep needs at least one length and one channel set");
    SweepResult out;
    const double rough_rate =
        rough_lindblad_rate(train_ds, model_dt, train_ds.t_max, n_threads);
    std::uint64_t config_index = 0;
    for (const auto& set : channel_sets) {
        for (int L : lengths) {
            KernelModel model;
            model.omega0 = train_ds.omega0;
            model.dt = model_dt;
            model.t_max = train_ds.t_max;
            model.bases = set;
            model.kernel_length = L;
            auto cost = [&](const std::vector<DiffScalar>& th) {
                return cost_population(model, th, train_ds, n_threads);
            };
            auto init = [&](std::uint64_t seed) {
                return kernel_init(model, rough_rate, seed);
            };
            const std::uint64_t config_seed = derive_seed(master_seed, config_index++);
            const SwarmResult swarm =
                swarm_train(swarm_runs, init, cost, budget, config_seed);
            for (const auto& run : swarm.runs) {
                SweepRow row;
                row.kernel_length = L;
                row.channel_set = channel_set_name(set);
                row.run_seed = run.seed;
                row.diverged = run.result.diverged;
                if (!run.result.diverged) {
                    row.train_rmse = std::sqrt(run.result.final_cost);
                    row.final_rmse =
                        population_rmse(model, run.result.final_theta, val_ds, n_threads);
                }
                out.rows.push_back(std::move(row));
            }
        }
    }
    return out;
}

} // namespace qdl
