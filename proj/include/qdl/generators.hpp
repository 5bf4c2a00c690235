#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdl/matrix.hpp"

namespace qdl {

// H(t) = h + sum_k S_k c_k(t): a static Hermitian part plus one Hermitian
// coupling matrix per control channel. Entries are whatever scalar the
// enclosing computation uses, so any of them can be a learned parameter.
template <class T>
struct HamiltonianParam {
    ComplexMatrix<T> h;
    std::vector<ComplexMatrix<T>> couplings; // S[:,:,k]

    int dim() const { return h.dim(); }
    std::size_t n_controls() const { return couplings.size(); }
};

// Mirror an upper-triangle assignment so the matrix stays Hermitian.
template <class T>
void set_hermitian_entry(ComplexMatrix<T>& m, int i, int j, const Cplx<T>& z) {
    m.at(i, j) = z;
    if (i != j) {
        m.at(j, i) = conj(z);
    } else {
        m.at(i, i).im = T(0.0);
    }
}

template <class T>
ComplexMatrix<T> hamiltonian_at(const HamiltonianParam<T>& p,
                                const std::vector<double>& controls) {
    if (controls.size() != p.couplings.size())
        throw DimensionError("hamiltonian_at: control count mismatch");
    ComplexMatrix<T> out = p.h;
    for (std::size_t k = 0; k < controls.size(); ++k)
        add_scaled(out, controls[k], p.couplings[k]);
    return out;
}

template <class T>
void hamiltonian_at_into(ComplexMatrix<T>& out, const HamiltonianParam<T>& p,
                         const std::vector<double>& controls) {
    if (controls.size() != p.couplings.size())
        throw DimensionError("hamiltonian_at: control count mismatch");
    out = p.h;
    for (std::size_t k = 0; k < controls.size(); ++k)
        add_scaled(out, controls[k], p.couplings[k]);
}

// Collapse channel: fixed operator structure times a learned real amplitude.
// The physical rate is amplitude^2, so gradient descent can roam the whole
// real line without ever proposing a negative rate.
template <class T>
struct CollapseChannel {
    Pauli base = Pauli::Z;
    T amplitude{};
    bool monitored = false;
};

template <class T>
ComplexMatrix<T> channel_operator(const CollapseChannel<T>& ch) {
    ComplexMatrix<T> op = cast_matrix<T>(pauli(ch.base));
    op *= ch.amplitude;
    return op;
}

// Measurement efficiency eta = logistic(raw), confined to (0, 1).
template <class T>
struct Efficiency {
    T raw{};
    T value() const { return logistic(raw); }
};

// Discretized memory kernel: one weight vector of length L per collapse
// channel, weights[ch][j] = K_ch(j * dtau). Weights are unconstrained reals;
// negative lobes are meaningful (coherent backflow), so positivity of the
// state is monitored downstream instead of being forced here.
template <class T>
struct MemoryKernel {
    double dtau = 0.0;
    int length = 0;
    std::vector<std::vector<T>> weights; // [channel][lag]

    void validate(std::size_t n_channels) const {
        if (length < 1) throw DimensionError("memory kernel length must be >= 1");
        if (!(dtau > 0.0)) throw DimensionError("memory kernel dtau must be > 0");
        if (weights.size() != n_channels)
            throw DimensionError("memory kernel needs one weight vector per channel");
        for (const auto& w : weights)
            if (static_cast<int>(w.size()) != length)
                throw DimensionError("memory kernel weight vector has wrong length");
    }
};

template <class T>
const T& kernel_value(const MemoryKernel<T>& k, std::size_t channel, int lag) {
    if (channel >= k.weights.size()) throw IndexError("kernel channel out of range");
    if (lag < 0 || lag >= k.length) throw IndexError("kernel lag out of range");
    return k.weights[channel][lag];
}

// K = delta/dtau at lag 0 reduces the convolution to an ordinary Lindblad
// dissipator with the given rate.
template <class T>
MemoryKernel<T> delta_kernel(double dtau, int length, const std::vector<double>& rates) {
    MemoryKernel<T> k;
    k.dtau = dtau;
    k.length = length;
    k.weights.resize(rates.size());
    for (std::size_t c = 0; c < rates.size(); ++c) {
        k.weights[c].assign(length, T(0.0));
        k.weights[c][0] = T(rates[c] / dtau);
    }
    return k;
}

// Everything gradient descent touches: the Hamiltonian parameterization, the
// collapse channels, the measurement efficiency, and (for non-Markovian
// models) the memory kernel.
template <class T>
struct GeneratorSet {
    HamiltonianParam<T> ham;
    std::vector<CollapseChannel<T>> channels;
    Efficiency<T> eta{T(0.0)};
    std::optional<MemoryKernel<T>> kernel;

    int dim() const { return ham.dim(); }

    const CollapseChannel<T>* monitored_channel() const {
        for (const auto& ch : channels)
            if (ch.monitored) return &ch;
        return nullptr;
    }
};

inline double strip(double x) { return x; }
inline double strip(const DiffScalar& x) { return x.v; }

// Collapse a parameterized generator set to its plain values, e.g. for
// serialization or for running the finite-difference oracle.
template <class T>
GeneratorSet<double> values_of(const GeneratorSet<T>& g) {
    GeneratorSet<double> out;
    out.ham.h = to_value(g.ham.h);
    for (const auto& s : g.ham.couplings) out.ham.couplings.push_back(to_value(s));
    for (const auto& ch : g.channels)
        out.channels.push_back({ch.base, strip(ch.amplitude), ch.monitored});
    out.eta.raw = strip(g.eta.raw);
    if (g.kernel) {
        MemoryKernel<double> k;
        k.dtau = g.kernel->dtau;
        k.length = g.kernel->length;
        k.weights.resize(g.kernel->weights.size());
        for (std::size_t c = 0; c < k.weights.size(); ++c) {
            k.weights[c].reserve(g.kernel->weights[c].size());
            for (const auto& w : g.kernel->weights[c]) k.weights[c].push_back(strip(w));
        }
        out.kernel = std::move(k);
    }
    return out;
}

inline const GeneratorSet<double>& values_of(const GeneratorSet<double>& g) { return g; }

} // namespace qdl
