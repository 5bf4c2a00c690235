#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdl/generators.hpp"
#include "qdl/matrix.hpp"
#include "qdl/rng.hpp"
#include "qdl/schedule.hpp"

namespace qdl {

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    int n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double t0_, double dt_, int n_steps_) : t0(t0_), dt(dt_), n_steps(n_steps_) {
        if (!(dt > 0.0)) throw DimensionError("time grid dt must be > 0");
        if (n_steps < 1) throw DimensionError("time grid needs n_steps >= 1");
    }

    double time_at(int n) const { return t0 + n * dt; }
    double t_end() const { return time_at(n_steps); }
};

// One realization of the driving Wiener process, reproducible from its seed.
struct WienerPath {
    std::uint64_t seed = 0;
    std::vector<double> increments; // each ~ Normal(0, dt)

    static WienerPath generate(std::uint64_t seed, const TimeGrid& grid) {
        WienerPath p;
        p.seed = seed;
        p.increments.resize(grid.n_steps);
        Rng rng(seed);
        const double s = std::sqrt(grid.dt);
        for (double& dw : p.increments) dw = s * rng.normal();
        return p;
    }
};

enum class StepMethod { Euler, RK4 };
enum class EvolutionMode { Lindblad, NZ };

// Ring buffer of the most recent states, lag 0 = newest. Realizes the
// rho(t - tau) reads of the memory-kernel convolution.
template <class T>
class HistoryBuffer {
public:
    explicit HistoryBuffer(int capacity) : capacity_(capacity) {
        if (capacity < 1) throw DimensionError("history capacity must be >= 1");
        buf_.reserve(capacity);
    }

    int capacity() const { return capacity_; }
    int size() const { return static_cast<int>(buf_.size()); }

    void push(DensityMatrix<T> state) {
        if (size() < capacity_) {
            buf_.push_back(std::move(state));
            head_ = size() - 1;
        } else {
            head_ = (head_ + 1) % capacity_;
            buf_[head_] = std::move(state);
        }
    }

    const DensityMatrix<T>& at_lag(int lag) const {
        if (lag < 0 || lag >= size()) throw IndexError("history lag out of range");
        return buf_[(head_ - lag + capacity_ * 2) % capacity_];
    }

private:
    int capacity_;
    int head_ = -1;
    std::vector<DensityMatrix<T>> buf_;
};

namespace detail {

// out += -i [H, rho]
template <class T, class H>
void acc_commutator(ComplexMatrix<T>& out, const ComplexMatrix<H>& ham,
                    const ComplexMatrix<T>& rho, ComplexMatrix<T>& w1,
                    ComplexMatrix<T>& w2) {
    mul_into(w1, ham, rho);
    mul_into(w2, rho, ham);
    const std::size_t n = out.size();
    for (std::size_t k = 0; k < n; ++k) {
        // -i z: re += z.im, im -= z.re
        Cplx<T>& o = out.data()[k];
        fma_add(o.re, 1.0, w1.data()[k].im);
        fma_sub(o.re, 1.0, w2.data()[k].im);
        fma_sub(o.im, 1.0, w1.data()[k].re);
        fma_add(o.im, 1.0, w2.data()[k].re);
    }
}

// out += D(c, rho) given the precomputed c^dag c
template <class T>
void acc_dissipator(ComplexMatrix<T>& out, const ComplexMatrix<T>& c,
                    const ComplexMatrix<T>& cdc, const ComplexMatrix<T>& rho,
                    ComplexMatrix<T>& w1, ComplexMatrix<T>& w2) {
    mul_into(w1, c, rho);
    mul_adjoint_into(w2, w1, c);
    out += w2;
    mul_into(w1, cdc, rho);
    add_scaled(out, -0.5, w1);
    mul_into(w1, rho, cdc);
    add_scaled(out, -0.5, w1);
}

// out = H(c, rho) = c rho + rho c^dag - Tr(rho (c + c^dag)) rho;
// returns Tr(rho c) as a byproduct since the SME steps need it anyway.
template <class T>
Cplx<T> backaction_into(ComplexMatrix<T>& out, const ComplexMatrix<T>& c,
                        const ComplexMatrix<T>& rho, ComplexMatrix<T>& w1) {
    mul_into(out, c, rho);
    Cplx<T> tr_rho_c = trace(out); // Tr(c rho) = Tr(rho c)
    mul_adjoint_into(w1, rho, c);
    out += w1;
    T tr = trace(out).re;
    add_scaled(out, -tr, rho);
    return tr_rho_c;
}

// rho <- (rho + rho^dag)/2, then rho / Tr(rho). Differentiable, and applied
// identically by every stepper so round-trip identities hold.
template <class T>
void renormalize(ComplexMatrix<T>& rho) {
    hermitize_inplace(rho);
    T tr = trace(rho).re;
    if (value(tr) == 0.0) throw NumericError("state trace collapsed to zero");
    rho *= (T(1.0) / tr);
}

template <class T>
void check_finite(const ComplexMatrix<T>& m, int step) {
    if (!all_finite(m))
        throw NumericError("non-finite state at step " + std::to_string(step));
}

// Channel operators and their c^dag c, built once per propagation.
template <class T>
struct ChannelOps {
    std::vector<ComplexMatrix<T>> c;
    std::vector<ComplexMatrix<T>> cdc;
    int monitored = -1; // index of the monitored channel, if any

    ChannelOps(const std::vector<CollapseChannel<T>>& channels, int dim) {
        for (std::size_t m = 0; m < channels.size(); ++m) {
            ComplexMatrix<T> op = channel_operator(channels[m]);
            if (op.dim() != dim) throw DimensionError("channel operator dim mismatch");
            ComplexMatrix<T> dag = adjoint(op);
            ComplexMatrix<T> sq(dim);
            mul_into(sq, dag, op);
            c.push_back(std::move(op));
            cdc.push_back(std::move(sq));
            if (channels[m].monitored) monitored = static_cast<int>(m);
        }
    }
};

} // namespace detail

// One explicit step of d(rho)/dt = -i[H, rho] + sum_m D(c_m, rho).
template <class T, class H>
DensityMatrix<T> lindblad_step(const DensityMatrix<T>& rho, const ComplexMatrix<H>& ham,
                               const std::vector<CollapseChannel<T>>& channels, double dt,
                               StepMethod method = StepMethod::Euler,
                               bool renormalize = true) {
    const int dim = rho.dim();
    if (ham.dim() != dim) throw DimensionError("lindblad_step: H dim mismatch");
    detail::ChannelOps<T> ops(channels, dim);

    ComplexMatrix<T> w1(dim), w2(dim), rhs(dim);
    auto eval_rhs = [&](const ComplexMatrix<T>& state, ComplexMatrix<T>& out) {
        out.set_zero();
        detail::acc_commutator(out, ham, state, w1, w2);
        for (std::size_t m = 0; m < ops.c.size(); ++m)
            detail::acc_dissipator(out, ops.c[m], ops.cdc[m], state, w1, w2);
    };

    ComplexMatrix<T> next = rho.matrix();
    if (method == StepMethod::Euler) {
        eval_rhs(rho.matrix(), rhs);
        add_scaled(next, dt, rhs);
    } else {
        ComplexMatrix<T> stage(dim), k(dim);
        eval_rhs(rho.matrix(), rhs); // k1
        add_scaled(next, dt / 6.0, rhs);
        stage = rho.matrix();
        add_scaled(stage, dt / 2.0, rhs);
        eval_rhs(stage, k); // k2
        add_scaled(next, dt / 3.0, k);
        stage = rho.matrix();
        add_scaled(stage, dt / 2.0, k);
        eval_rhs(stage, k); // k3
        add_scaled(next, dt / 3.0, k);
        stage = rho.matrix();
        add_scaled(stage, dt, k);
        eval_rhs(stage, k); // k4
        add_scaled(next, dt / 6.0, k);
    }
    detail::check_finite(next, 0);
    if (renormalize) detail::renormalize(next);
    return DensityMatrix<T>::unchecked(std::move(next));
}

struct SmeSimResult {
    std::vector<DensityMatrix<double>> trajectory; // n_steps + 1 states
    std::vector<double> record;                    // V_j, one per step
    int final_bit = 0;
    double final_excited_prob = 0.0;
};

// Euler-Maruyama simulation of the monitored master equation. Emits the weak
// measurement record V_j = 2 sqrt(eta) Tr(rho_j c) + dW_j/dt and a final
// projective z-basis bit sampled from the Born probability of the end state.
inline SmeSimResult sme_simulate(const GeneratorSet<double>& gen, const TimeGrid& grid,
                                 const WienerPath& noise, const DensityMatrix<double>& rho0) {
    if (static_cast<int>(noise.increments.size()) != grid.n_steps)
        throw DimensionError("noise path length != n_steps");
    const int dim = rho0.dim();
    detail::ChannelOps<double> ops(gen.channels, dim);
    if (ops.monitored < 0) throw ConfigError("SME simulation needs a monitored channel");

    const double eta = gen.eta.value();
    const double sqrt_eta = std::sqrt(eta);
    ComplexMatrix<double> H(dim);
    hamiltonian_at_into(H, gen.ham, {});

    SmeSimResult res;
    res.trajectory.reserve(grid.n_steps + 1);
    res.record.reserve(grid.n_steps);
    res.trajectory.push_back(rho0);

    ComplexMatrix<double> w1(dim), w2(dim), drift(dim), hsup(dim), next(dim);
    DensityMatrix<double> rho = rho0;
    for (int n = 0; n < grid.n_steps; ++n) {
        const double dw = noise.increments[n];
        drift.set_zero();
        detail::acc_commutator(drift, H, rho.matrix(), w1, w2);
        for (std::size_t m = 0; m < ops.c.size(); ++m)
            detail::acc_dissipator(drift, ops.c[m], ops.cdc[m], rho.matrix(), w1, w2);
        const Cd tr_rho_c =
            detail::backaction_into(hsup, ops.c[ops.monitored], rho.matrix(), w1);

        res.record.push_back(2.0 * sqrt_eta * tr_rho_c.re + dw / grid.dt);

        next = rho.matrix();
        add_scaled(next, grid.dt, drift);
        add_scaled(next, sqrt_eta * dw, hsup);
        detail::check_finite(next, n);
        detail::renormalize(next);
        std::swap(rho.matrix(), next);
        res.trajectory.push_back(rho);
    }

    res.final_excited_prob = std::clamp(rho.excited_population(), 0.0, 1.0);
    Rng bit_rng(derive_seed(noise.seed, 0xb17));
    res.final_bit = bit_rng.bernoulli(res.final_excited_prob) ? 1 : 0;
    return res;
}

// Record-driven reconstruction: dV = V dt substituted for the innovation,
// which makes the propagation deterministic in (record, parameters) and
// therefore differentiable end to end. The step arithmetic mirrors
// sme_simulate so reconstructing with the generating parameters reproduces
// the hidden trajectory to roundoff.
template <class T, class F>
void sme_reconstruct_observe(const GeneratorSet<T>& gen, const TimeGrid& grid,
                             const std::vector<double>& record,
                             const DensityMatrix<T>& rho0, F&& observe) {
    if (static_cast<int>(record.size()) != grid.n_steps)
        throw DimensionError("record length != n_steps");
    const int dim = rho0.dim();
    detail::ChannelOps<T> ops(gen.channels, dim);
    if (ops.monitored < 0) throw ConfigError("SME reconstruction needs a monitored channel");

    const T eta = gen.eta.value();
    const T sqrt_eta = sqrt(eta);
    ComplexMatrix<T> H(dim);
    hamiltonian_at_into(H, gen.ham, {});

    ComplexMatrix<T> w1(dim), w2(dim), drift(dim), hsup(dim), next(dim);
    DensityMatrix<T> rho = rho0;
    observe(0, rho);
    for (int n = 0; n < grid.n_steps; ++n) {
        drift.set_zero();
        detail::acc_commutator(drift, H, rho.matrix(), w1, w2);
        for (std::size_t m = 0; m < ops.c.size(); ++m)
            detail::acc_dissipator(drift, ops.c[m], ops.cdc[m], rho.matrix(), w1, w2);
        const Cplx<T> tr_rho_c =
            detail::backaction_into(hsup, ops.c[ops.monitored], rho.matrix(), w1);

        // sqrt(eta) dV - 2 eta Tr(rho c) dt, with dV = V dt
        T coeff = sqrt_eta * record[n];
        fma_sub(coeff, 2.0 * eta, tr_rho_c.re);
        coeff *= grid.dt;

        next = rho.matrix();
        add_scaled(next, grid.dt, drift);
        add_scaled(next, coeff, hsup);
        detail::check_finite(next, n);
        detail::renormalize(next);
        std::swap(rho.matrix(), next);
        observe(n + 1, rho);
    }
}

template <class T>
std::vector<DensityMatrix<T>> sme_reconstruct(const GeneratorSet<T>& gen,
                                              const TimeGrid& grid,
                                              const std::vector<double>& record,
                                              const DensityMatrix<T>& rho0) {
    std::vector<DensityMatrix<T>> traj;
    traj.reserve(grid.n_steps + 1);
    sme_reconstruct_observe(gen, grid, record, rho0,
                            [&](int, const DensityMatrix<T>& s) { traj.push_back(s); });
    return traj;
}

template <class T>
DensityMatrix<T> sme_reconstruct_final(const GeneratorSet<T>& gen, const TimeGrid& grid,
                                       const std::vector<double>& record,
                                       const DensityMatrix<T>& rho0) {
    DensityMatrix<T> last;
    sme_reconstruct_observe(gen, grid, record, rho0,
                            [&](int, const DensityMatrix<T>& s) { last = s; });
    return last;
}

// One Euler step of the memory-kernel master equation. The convolution
// truncates at the available history (the integral runs from 0 to t), reads
// lag 0 as the current state, and pushes the result.
template <class T, class H>
DensityMatrix<T> nz_step(const DensityMatrix<T>& rho, HistoryBuffer<T>& history,
                         const ComplexMatrix<H>& ham,
                         const std::vector<CollapseChannel<T>>& channels,
                         const MemoryKernel<T>& kernel, double dt,
                         bool renormalize = true) {
    if (history.size() < 1) throw IndexError("nz_step needs the current state in history");
    kernel.validate(channels.size());
    const int dim = rho.dim();
    detail::ChannelOps<T> ops(channels, dim);

    ComplexMatrix<T> w1(dim), w2(dim), drift(dim), d_scaled(dim);
    drift.set_zero();
    detail::acc_commutator(drift, ham, rho.matrix(), w1, w2);
    const int lags = std::min(history.size(), kernel.length);
    for (std::size_t m = 0; m < ops.c.size(); ++m) {
        for (int j = 0; j < lags; ++j) {
            d_scaled.set_zero();
            detail::acc_dissipator(d_scaled, ops.c[m], ops.cdc[m],
                                   history.at_lag(j).matrix(), w1, w2);
            d_scaled *= kernel.dtau;
            add_scaled(drift, kernel.weights[m][j], d_scaled);
        }
    }

    ComplexMatrix<T> next = rho.matrix();
    add_scaled(next, dt, drift);
    detail::check_finite(next, history.size());
    if (renormalize) detail::renormalize(next);
    auto out = DensityMatrix<T>::unchecked(std::move(next));
    history.push(out);
    return out;
}

// Full fixed-step propagation with per-step control evaluation. The NZ branch
// caches dtau * D(c_m, rho_k) per visited state so each step costs one
// dissipator evaluation per channel plus an O(L) weighted accumulation,
// instead of O(L) dissipator evaluations.
template <class T, class F>
void propagate_observe(const GeneratorSet<T>& gen, const TimeGrid& grid,
                       const DensityMatrix<T>& rho0, const ControlSchedule& controls,
                       EvolutionMode mode, F&& observe,
                       StepMethod method = StepMethod::Euler, bool renormalize = true) {
    const int dim = rho0.dim();
    if (gen.dim() != dim) throw DimensionError("propagate: generator/state dim mismatch");
    if (controls.n_controls() != gen.ham.n_controls())
        throw DimensionError("propagate: schedule control count mismatch");
    detail::ChannelOps<T> ops(gen.channels, dim);

    ComplexMatrix<T> H(dim), w1(dim), w2(dim), rhs(dim);
    DensityMatrix<T> rho = rho0;
    observe(0, rho);

    if (mode == EvolutionMode::NZ) {
        if (!gen.kernel) throw ConfigError("NZ propagation requires a memory kernel");
        const MemoryKernel<T>& kernel = *gen.kernel;
        kernel.validate(gen.channels.size());
        const int L = kernel.length;
        ComplexMatrix<T> scratch(dim);
        // ring of dtau-scaled dissipators, one slot per channel per lag
        std::vector<std::vector<ComplexMatrix<T>>> dring(
            gen.channels.size(), std::vector<ComplexMatrix<T>>(L, ComplexMatrix<T>(dim)));
        for (int n = 0; n < grid.n_steps; ++n) {
            const int slot = n % L;
            for (std::size_t m = 0; m < ops.c.size(); ++m) {
                ComplexMatrix<T>& d = dring[m][slot];
                d.set_zero();
                detail::acc_dissipator(d, ops.c[m], ops.cdc[m], rho.matrix(), w1, w2);
                d *= kernel.dtau;
            }
            hamiltonian_at_into(H, gen.ham, controls.value_at(grid.time_at(n)));
            rhs.set_zero();
            detail::acc_commutator(rhs, H, rho.matrix(), w1, w2);
            const int lags = std::min(n + 1, L);
            for (std::size_t m = 0; m < ops.c.size(); ++m)
                for (int j = 0; j < lags; ++j)
                    add_scaled(rhs, kernel.weights[m][j], dring[m][(n - j) % L]);

            scratch = rho.matrix();
            add_scaled(scratch, grid.dt, rhs);
            detail::check_finite(scratch, n);
            if (renormalize) detail::renormalize(scratch);
            std::swap(rho.matrix(), scratch);
            observe(n + 1, rho);
        }
        return;
    }

    // Controls are piecewise constant and grids align with their segment
    // boundaries, so the Hamiltonian is frozen per step at the left endpoint;
    // stage times never peek into the next segment.
    auto eval_rhs = [&](const ComplexMatrix<T>& state, ComplexMatrix<T>& out) {
        out.set_zero();
        detail::acc_commutator(out, H, state, w1, w2);
        for (std::size_t m = 0; m < ops.c.size(); ++m)
            detail::acc_dissipator(out, ops.c[m], ops.cdc[m], state, w1, w2);
    };

    ComplexMatrix<T> stage(dim), k(dim), next(dim);
    for (int n = 0; n < grid.n_steps; ++n) {
        hamiltonian_at_into(H, gen.ham, controls.value_at(grid.time_at(n)));
        next = rho.matrix();
        if (method == StepMethod::Euler) {
            eval_rhs(rho.matrix(), rhs);
            add_scaled(next, grid.dt, rhs);
        } else {
            const double dt = grid.dt;
            eval_rhs(rho.matrix(), rhs); // k1
            add_scaled(next, dt / 6.0, rhs);
            stage = rho.matrix();
            add_scaled(stage, dt / 2.0, rhs);
            eval_rhs(stage, k); // k2
            add_scaled(next, dt / 3.0, k);
            stage = rho.matrix();
            add_scaled(stage, dt / 2.0, k);
            eval_rhs(stage, k); // k3
            add_scaled(next, dt / 3.0, k);
            stage = rho.matrix();
            add_scaled(stage, dt, k);
            eval_rhs(stage, k); // k4
            add_scaled(next, dt / 6.0, k);
        }
        detail::check_finite(next, n);
        if (renormalize) detail::renormalize(next);
        std::swap(rho.matrix(), next);
        observe(n + 1, rho);
    }
}

template <class T>
std::vector<DensityMatrix<T>> propagate(const GeneratorSet<T>& gen, const TimeGrid& grid,
                                        const DensityMatrix<T>& rho0,
                                        const ControlSchedule& controls, EvolutionMode mode,
                                        StepMethod method = StepMethod::Euler,
                                        bool renormalize = true) {
    std::vector<DensityMatrix<T>> traj;
    traj.reserve(grid.n_steps + 1);
    propagate_observe(
        gen, grid, rho0, controls, mode,
        [&](int, const DensityMatrix<T>& s) { traj.push_back(s); }, method, renormalize);
    return traj;
}

} // namespace qdl
