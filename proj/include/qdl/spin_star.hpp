#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qdl/parallel.hpp"
#include "qdl/solvers.hpp"

namespace qdl {

enum class BathInitial { AllGround, Thermal };

// Central qubit coupled to n_bath parasitic spins through sigma_x sigma_x^(k)
// terms, driven along x and y. The ground-truth generator for the
// non-Markovian experiments.
struct SpinStarConfig {
    int n_bath = 4;
    double omega0 = 1.0;
    std::vector<double> couplings; // A_k, one per bath spin
    ControlSchedule drive;         // segments of (eps_x, eps_y)
    BathInitial bath_initial = BathInitial::AllGround;
    double beta = 0.0; // inverse temperature for Thermal, gap omega0 per spin
    std::uint64_t seed = 0;

    void validate() const {
        if (n_bath < 0) throw ConfigError("n_bath must be >= 0");
        if (static_cast<int>(couplings.size()) != n_bath)
            throw DimensionError("couplings length must equal n_bath");
    }

    int full_dim() const { return 1 << (n_bath + 1); }
};

namespace detail {

// op acting on tensor factor `which` of `factors` qubits, identity elsewhere.
inline ComplexMatrix<double> op_on_factor(int factors, int which,
                                          const ComplexMatrix<double>& op) {
    ComplexMatrix<double> out = ComplexMatrix<double>::identity(1);
    for (int f = 0; f < factors; ++f) {
        const ComplexMatrix<double>& part =
            (f == which) ? op : ComplexMatrix<double>::identity(2);
        out = tensor(out, part);
    }
    return out;
}

} // namespace detail

// Static part (omega0/2) sigma_z + sum_k A_k sigma_x sigma_x^(k), plus the
// drive coupling matrices sigma_x and sigma_y on the system factor. Packaged
// as a HamiltonianParam so the generic propagator can drive it.
inline HamiltonianParam<double> spinstar_hamiltonian_param(const SpinStarConfig& cfg) {
    cfg.validate();
    const int factors = cfg.n_bath + 1;
    const ComplexMatrix<double> sx = pauli(Pauli::X);
    HamiltonianParam<double> p;
    p.h = detail::op_on_factor(factors, 0, pauli(Pauli::Z)) * (0.5 * cfg.omega0);
    for (int k = 0; k < cfg.n_bath; ++k) {
        const ComplexMatrix<double> sys_x = detail::op_on_factor(factors, 0, sx);
        const ComplexMatrix<double> bath_x = detail::op_on_factor(factors, k + 1, sx);
        ComplexMatrix<double> pair(cfg.full_dim());
        mul_into(pair, sys_x, bath_x);
        add_scaled(p.h, cfg.couplings[k], pair);
    }
    p.couplings.push_back(detail::op_on_factor(factors, 0, sx));
    p.couplings.push_back(detail::op_on_factor(factors, 0, pauli(Pauli::Y)));
    return p;
}

inline ComplexMatrix<double> build_spinstar_hamiltonian(const SpinStarConfig& cfg, double t) {
    return hamiltonian_at(spinstar_hamiltonian_param(cfg), cfg.drive.value_at(t));
}

// |g><g| on the system, bath spins all ground or thermal(beta).
inline DensityMatrix<double> spinstar_initial_state(const SpinStarConfig& cfg) {
    ComplexMatrix<double> rho = ground_state<double>().matrix();
    for (int k = 0; k < cfg.n_bath; ++k) {
        ComplexMatrix<double> spin(2);
        if (cfg.bath_initial == BathInitial::AllGround) {
            spin.at(1, 1).re = 1.0;
        } else {
            const double pe = 1.0 / (1.0 + std::exp(cfg.beta * cfg.omega0));
            spin.at(0, 0).re = pe;
            spin.at(1, 1).re = 1.0 - pe;
        }
        rho = tensor(rho, spin);
    }
    return DensityMatrix<double>::normalized(std::move(rho));
}

// RK4 unitary propagation of the full system-bath density matrix, reduced to
// the 2x2 system state at every step.
inline std::vector<DensityMatrix<double>> simulate_reduced(const SpinStarConfig& cfg,
                                                           const TimeGrid& grid) {
    GeneratorSet<double> gen;
    gen.ham = spinstar_hamiltonian_param(cfg);
    const std::vector<int> dims{2, 1 << cfg.n_bath};
    std::vector<DensityMatrix<double>> reduced;
    reduced.reserve(grid.n_steps + 1);
    propagate_observe(
        gen, grid, spinstar_initial_state(cfg), cfg.drive, EvolutionMode::Lindblad,
        [&](int, const DensityMatrix<double>& full) {
            reduced.push_back(DensityMatrix<double>::normalized(
                partial_trace(full.matrix(), 0, dims)));
        },
        StepMethod::RK4);
    return reduced;
}

// Same propagation but keeping the full state, for the unitarity and energy
// conservation checks.
inline std::vector<DensityMatrix<double>> simulate_full(const SpinStarConfig& cfg,
                                                        const TimeGrid& grid) {
    GeneratorSet<double> gen;
    gen.ham = spinstar_hamiltonian_param(cfg);
    return propagate(gen, grid, spinstar_initial_state(cfg), cfg.drive,
                     EvolutionMode::Lindblad, StepMethod::RK4);
}

// One experimental shot of the weak-measurement experiment.
struct TrajectoryRecord {
    TimeGrid grid;
    std::vector<double> record; // V samples, one per step
    int final_bit = 0;
    std::uint64_t seed = 0;
};

struct SmeTruth {
    double omega = 1.0;
    double gamma = 0.5;
    double eta = 0.4;
};

struct SmeDataset {
    TimeGrid grid;
    SmeTruth truth;
    std::string rho0 = "ground";
    std::uint64_t master_seed = 0;
    std::vector<TrajectoryRecord> records;
    // the "experimentally unavailable" excited populations, kept on the side
    // for validation only
    std::vector<std::vector<double>> truth_populations;
};

inline GeneratorSet<double> sme_truth_generators(const SmeTruth& t) {
    GeneratorSet<double> gen;
    gen.ham.h = pauli(Pauli::X) * t.omega;
    gen.channels.push_back({Pauli::Z, std::sqrt(t.gamma), true});
    // logit; eta = 0 and 1 saturate cleanly through exp overflow
    gen.eta.raw = std::log(t.eta / (1.0 - t.eta));
    return gen;
}

// S independently seeded weak-measurement shots of the qubit-with-readout
// test system H = Omega sigma_x, c = sqrt(gamma) sigma_z.
inline SmeDataset emit_sme_dataset(const SmeTruth& truth, const TimeGrid& grid, int S,
                                   std::uint64_t master_seed, int n_threads = 1) {
    if (S < 1) throw ConfigError("need at least one trajectory");
    SmeDataset ds;
    ds.grid = grid;
    ds.truth = truth;
    ds.master_seed = master_seed;
    ds.records.resize(S);
    ds.truth_populations.resize(S);
    const GeneratorSet<double> gen = sme_truth_generators(truth);
    const DensityMatrix<double> rho0 = ground_state<double>();
    parallel_for(static_cast<std::size_t>(S), n_threads, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(master_seed, i);
        const WienerPath noise = WienerPath::generate(seed, grid);
        SmeSimResult sim = sme_simulate(gen, grid, noise, rho0);
        ds.records[i] = {grid, std::move(sim.record), sim.final_bit, seed};
        auto& pops = ds.truth_populations[i];
        pops.reserve(sim.trajectory.size());
        for (const auto& st : sim.trajectory) pops.push_back(st.excited_population());
    });
    return ds;
}

// Repeated-sampling training data: excited populations of the reduced system
// at T evenly spaced durations, per random drive schedule.
struct PopulationTrajectory {
    ControlSchedule schedule;
    std::vector<double> times;
    std::vector<double> populations;
};

struct PopulationDataset {
    int n_bath = 4;
    double omega0 = 1.0;
    std::vector<double> couplings;
    double t_max = 0.0;
    double sim_dt = 0.0;
    double model_dt = 0.0; // recorded grid hint for trainers
    long shots = 0;        // 0 == exact Born probabilities
    std::uint64_t master_seed = 0;
    std::vector<PopulationTrajectory> trajectories;

    int S() const { return static_cast<int>(trajectories.size()); }
    int T() const {
        return trajectories.empty() ? 0
                                    : static_cast<int>(trajectories.front().times.size());
    }
};

struct SpinStarDatasetConfig {
    int n_bath = 4;
    double omega0 = 1.0;
    double coupling_min = 0.05; // units of omega0
    double coupling_max = 0.25;
    // explicit couplings pin the physical system across datasets (training vs
    // validation); empty means draw from the master seed
    std::vector<double> couplings;
    int segments = 8;
    double drive_amp = 1.0; // units of omega0
    double t_max = 8.0;
    double sim_dt = 0.002;
    double model_dt = 0.02;
    long shots = 0;
    BathInitial bath_initial = BathInitial::AllGround;
    double beta = 0.0;
};

inline PopulationDataset emit_population_dataset(const SpinStarDatasetConfig& cfg, int S,
                                                 int T, std::uint64_t master_seed,
                                                 int n_threads = 1) {
    if (S < 1 || T < 1) throw ConfigError("need S >= 1 and T >= 1");
    if (!(cfg.t_max > 0.0) || !(cfg.sim_dt > 0.0))
        throw ConfigError("t_max and sim_dt must be positive");

    PopulationDataset ds;
    ds.n_bath = cfg.n_bath;
    ds.omega0 = cfg.omega0;
    ds.t_max = cfg.t_max;
    ds.sim_dt = cfg.sim_dt;
    ds.model_dt = cfg.model_dt;
    ds.shots = cfg.shots;
    ds.master_seed = master_seed;

    if (cfg.couplings.empty()) {
        Rng coupling_rng(derive_seed(master_seed, 0xc0));
        ds.couplings.resize(cfg.n_bath);
        for (double& a : ds.couplings)
            a = cfg.omega0 * coupling_rng.uniform(cfg.coupling_min, cfg.coupling_max);
    } else {
        if (static_cast<int>(cfg.couplings.size()) != cfg.n_bath)
            throw ConfigError("explicit couplings must match n_bath");
        ds.couplings = cfg.couplings;
    }

    const int n_steps = static_cast<int>(std::lround(cfg.t_max / cfg.sim_dt));
    const TimeGrid grid(0.0, cfg.sim_dt, n_steps);

    ds.trajectories.resize(S);
    parallel_for(static_cast<std::size_t>(S), n_threads, [&](std::size_t i) {
        Rng rng(derive_seed(master_seed, i));
        SpinStarConfig sc;
        sc.n_bath = cfg.n_bath;
        sc.omega0 = cfg.omega0;
        sc.couplings = ds.couplings;
        sc.bath_initial = cfg.bath_initial;
        sc.beta = cfg.beta;
        sc.drive = ControlSchedule::random_piecewise(0.0, cfg.t_max, cfg.segments, 2,
                                                     cfg.drive_amp * cfg.omega0, rng);
        const auto reduced = simulate_reduced(sc, grid);

        PopulationTrajectory& out = ds.trajectories[i];
        out.schedule = sc.drive;
        out.times.reserve(T);
        out.populations.reserve(T);
        for (int j = 1; j <= T; ++j) {
            const double tj = cfg.t_max * static_cast<double>(j) / T;
            const int nj = static_cast<int>(std::lround(tj / cfg.sim_dt));
            double p = std::clamp(reduced[nj].excited_population(), 0.0, 1.0);
            if (cfg.shots > 0) {
                long hits = 0;
                for (long s = 0; s < cfg.shots; ++s)
                    if (rng.bernoulli(p)) ++hits;
                p = static_cast<double>(hits) / static_cast<double>(cfg.shots);
            }
            out.times.push_back(nj * cfg.sim_dt);
            out.populations.push_back(p);
        }
    });
    return ds;
}

} // namespace qdl
