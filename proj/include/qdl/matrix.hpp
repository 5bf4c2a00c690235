#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qdl/complex.hpp"
#include "qdl/errors.hpp"

namespace qdl {

// Dense square complex matrix, row-major. Dimensions stay small here (at most
// 2^(N+1) for the spin-star source, 32 in practice), so there is no sparse
// path and everything is a value type.
template <class T>
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim) {
        if (dim <= 0) throw DimensionError("matrix dim must be positive");
    }

    static ComplexMatrix identity(int dim) {
        ComplexMatrix m(dim);
        for (int i = 0; i < dim; ++i) m.at(i, i).re = T(1.0);
        return m;
    }

    int dim() const { return dim_; }
    std::size_t size() const { return a_.size(); }

    Cplx<T>& at(int i, int j) { return a_[static_cast<std::size_t>(i) * dim_ + j]; }
    const Cplx<T>& at(int i, int j) const {
        return a_[static_cast<std::size_t>(i) * dim_ + j];
    }

    Cplx<T>* data() { return a_.data(); }
    const Cplx<T>* data() const { return a_.data(); }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        check_same_dim(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        check_same_dim(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }
    template <class S>
    ComplexMatrix& operator*=(const S& s) {
        for (auto& z : a_) z *= s;
        return *this;
    }

    void set_zero() {
        for (auto& z : a_) zero_in_place(z);
    }

    void check_same_dim(const ComplexMatrix& o) const {
        if (dim_ != o.dim_)
            throw DimensionError("matrix dim mismatch: " + std::to_string(dim_) +
                                 " vs " + std::to_string(o.dim_));
    }

private:
    int dim_ = 0;
    std::vector<Cplx<T>> a_;
};

template <class T>
ComplexMatrix<T> operator+(ComplexMatrix<T> a, const ComplexMatrix<T>& b) {
    a += b;
    return a;
}
template <class T>
ComplexMatrix<T> operator-(ComplexMatrix<T> a, const ComplexMatrix<T>& b) {
    a -= b;
    return a;
}
template <class T, class S>
ComplexMatrix<T> operator*(ComplexMatrix<T> a, const S& s) {
    a *= s;
    return a;
}
template <class T, class S>
ComplexMatrix<T> operator*(const S& s, ComplexMatrix<T> a) {
    a *= s;
    return a;
}

// out = a * b into a preallocated matrix; the accumulate form the solvers use.
// out must not alias a or b; entries are accumulated in place so persistent
// workspaces stay allocation-free.
template <class T, class A, class B>
void mul_into(ComplexMatrix<T>& out, const ComplexMatrix<A>& a, const ComplexMatrix<B>& b) {
    if (a.dim() != b.dim() || out.dim() != a.dim())
        throw DimensionError("mul_into dim mismatch");
    const int n = a.dim();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Cplx<T>& acc = out.at(i, j);
            zero_in_place(acc);
            for (int k = 0; k < n; ++k) cfma(acc, a.at(i, k), b.at(k, j));
        }
    }
}

// out = a * b^dagger
// out must not alias a or b
template <class T, class A, class B>
void mul_adjoint_into(ComplexMatrix<T>& out, const ComplexMatrix<A>& a,
                      const ComplexMatrix<B>& b) {
    if (a.dim() != b.dim() || out.dim() != a.dim())
        throw DimensionError("mul_adjoint_into dim mismatch");
    const int n = a.dim();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Cplx<T>& acc = out.at(i, j);
            zero_in_place(acc);
            for (int k = 0; k < n; ++k) cfma_conj(acc, a.at(i, k), b.at(j, k));
        }
    }
}

template <class T>
ComplexMatrix<T> mul(const ComplexMatrix<T>& a, const ComplexMatrix<T>& b) {
    ComplexMatrix<T> out(a.dim());
    mul_into(out, a, b);
    return out;
}

template <class T>
ComplexMatrix<T> adjoint(const ComplexMatrix<T>& a) {
    ComplexMatrix<T> out(a.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) out.at(i, j) = conj(a.at(j, i));
    return out;
}

// acc += s * m for real or complex scalar s
template <class T, class S, class M>
void add_scaled(ComplexMatrix<T>& acc, const S& s, const ComplexMatrix<M>& m) {
    if (acc.dim() != m.dim()) throw DimensionError("add_scaled dim mismatch");
    for (std::size_t k = 0; k < acc.size(); ++k) axpy(acc.data()[k], s, m.data()[k]);
}

template <class T, class S, class M>
void add_cscaled(ComplexMatrix<T>& acc, const Cplx<S>& s, const ComplexMatrix<M>& m) {
    if (acc.dim() != m.dim()) throw DimensionError("add_cscaled dim mismatch");
    for (std::size_t k = 0; k < acc.size(); ++k) cfma(acc.data()[k], s, m.data()[k]);
}

template <class T>
Cplx<T> trace(const ComplexMatrix<T>& m) {
    Cplx<T> t{};
    for (int i = 0; i < m.dim(); ++i) t += m.at(i, i);
    return t;
}

// Tr(a b) without materializing the product.
template <class A, class B>
auto trace_of_product(const ComplexMatrix<A>& a, const ComplexMatrix<B>& b) {
    if (a.dim() != b.dim()) throw DimensionError("trace_of_product dim mismatch");
    using R = decltype(A{} * B{});
    Cplx<R> t{};
    const int n = a.dim();
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) cfma(t, a.at(i, k), b.at(k, i));
    return t;
}

// m <- (m + m^dagger) / 2
template <class T>
void hermitize_inplace(ComplexMatrix<T>& m) {
    const int n = m.dim();
    for (int i = 0; i < n; ++i) {
        m.at(i, i).im = T(0.0); // (z + conj(z))/2 keeps the real part exactly
        for (int j = i + 1; j < n; ++j) {
            Cplx<T> u = m.at(i, j);
            u += conj(m.at(j, i));
            u *= 0.5;
            m.at(i, j) = u;
            m.at(j, i) = conj(u);
        }
    }
}

template <class T>
ComplexMatrix<T> hermitized(ComplexMatrix<T> m) {
    hermitize_inplace(m);
    return m;
}

// max_ij |m_ij - conj(m_ji)| at the value level
template <class T>
double hermiticity_deviation(const ComplexMatrix<T>& m) {
    double dev = 0.0;
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) {
            const Cd z = to_value(m.at(i, j));
            const Cd w = to_value(m.at(j, i));
            dev = std::max(dev, std::hypot(z.re - w.re, z.im + w.im));
        }
    return dev;
}

template <class T>
double max_abs(const ComplexMatrix<T>& m) {
    double v = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const Cd z = to_value(m.data()[k]);
        v = std::max(v, std::max(std::fabs(z.re), std::fabs(z.im)));
    }
    return v;
}

template <class A, class B>
double max_abs_diff(const ComplexMatrix<A>& a, const ComplexMatrix<B>& b) {
    if (a.dim() != b.dim()) throw DimensionError("max_abs_diff dim mismatch");
    double v = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const Cd z = to_value(a.data()[k]);
        const Cd w = to_value(b.data()[k]);
        v = std::max(v, std::max(std::fabs(z.re - w.re), std::fabs(z.im - w.im)));
    }
    return v;
}

template <class T>
bool all_finite(const ComplexMatrix<T>& m) {
    for (std::size_t k = 0; k < m.size(); ++k)
        if (!isfinite_value(m.data()[k])) return false;
    return true;
}

inline ComplexMatrix<double> to_value(const ComplexMatrix<DiffScalar>& m) {
    ComplexMatrix<double> out(m.dim());
    for (std::size_t k = 0; k < m.size(); ++k) out.data()[k] = to_value(m.data()[k]);
    return out;
}
inline const ComplexMatrix<double>& to_value(const ComplexMatrix<double>& m) { return m; }

template <class T>
ComplexMatrix<T> cast_matrix(const ComplexMatrix<double>& m) {
    ComplexMatrix<T> out(m.dim());
    for (std::size_t k = 0; k < m.size(); ++k) {
        out.data()[k].re = T(m.data()[k].re);
        out.data()[k].im = T(m.data()[k].im);
    }
    return out;
}

// Kronecker product, first factor most significant.
template <class T>
ComplexMatrix<T> tensor(const ComplexMatrix<T>& a, const ComplexMatrix<T>& b) {
    const int na = a.dim(), nb = b.dim();
    ComplexMatrix<T> out(na * nb);
    for (int ia = 0; ia < na; ++ia)
        for (int ja = 0; ja < na; ++ja)
            for (int ib = 0; ib < nb; ++ib)
                for (int jb = 0; jb < nb; ++jb)
                    out.at(ia * nb + ib, ja * nb + jb) = a.at(ia, ja) * b.at(ib, jb);
    return out;
}

// Trace out every tensor factor except `keep`. dims lists the factor
// dimensions in kron order (first factor most significant).
template <class T>
ComplexMatrix<T> partial_trace(const ComplexMatrix<T>& m, std::size_t keep,
                               const std::vector<int>& dims) {
    if (keep >= dims.size()) throw IndexError("partial_trace: keep index out of range");
    long total = 1;
    for (int d : dims) {
        if (d <= 0) throw DimensionError("partial_trace: factor dims must be positive");
        total *= d;
    }
    if (total != m.dim())
        throw DimensionError("partial_trace: product of dims != matrix dim");

    std::vector<long> stride(dims.size());
    long acc = 1;
    for (std::size_t f = dims.size(); f-- > 0;) {
        stride[f] = acc;
        acc *= dims[f];
    }
    const int dk = dims[keep];
    const long rest = total / dk;

    ComplexMatrix<T> out(dk);
    for (long r = 0; r < rest; ++r) {
        // decode r into the indices of the traced-out factors
        long base = 0;
        long rr = r;
        for (std::size_t f = dims.size(); f-- > 0;) {
            if (f == keep) continue;
            base += (rr % dims[f]) * stride[f];
            rr /= dims[f];
        }
        for (int i = 0; i < dk; ++i)
            for (int j = 0; j < dk; ++j)
                out.at(i, j) += m.at(static_cast<int>(base + i * stride[keep]),
                                     static_cast<int>(base + j * stride[keep]));
    }
    return out;
}

enum class Pauli { X, Y, Z, Plus, Minus, Identity };

// Basis convention: index 0 = excited |e>, index 1 = ground |g>,
// sigma_z |e> = +|e>. sigma_plus = (sigma_x + i sigma_y)/2 maps |g> to |e>.
inline ComplexMatrix<double> pauli(Pauli which) {
    ComplexMatrix<double> m(2);
    switch (which) {
        case Pauli::X:
            m.at(0, 1) = {1.0, 0.0};
            m.at(1, 0) = {1.0, 0.0};
            break;
        case Pauli::Y:
            m.at(0, 1) = {0.0, -1.0};
            m.at(1, 0) = {0.0, 1.0};
            break;
        case Pauli::Z:
            m.at(0, 0) = {1.0, 0.0};
            m.at(1, 1) = {-1.0, 0.0};
            break;
        case Pauli::Plus:
            m.at(0, 1) = {1.0, 0.0};
            break;
        case Pauli::Minus:
            m.at(1, 0) = {1.0, 0.0};
            break;
        case Pauli::Identity:
            m.at(0, 0) = {1.0, 0.0};
            m.at(1, 1) = {1.0, 0.0};
            break;
    }
    return m;
}

inline std::string pauli_name(Pauli p) {
    switch (p) {
        case Pauli::X: return "sx";
        case Pauli::Y: return "sy";
        case Pauli::Z: return "sz";
        case Pauli::Plus: return "sp";
        case Pauli::Minus: return "sm";
        case Pauli::Identity: return "id";
    }
    return "?";
}

inline Pauli pauli_from_name(const std::string& s) {
    if (s == "sx") return Pauli::X;
    if (s == "sy") return Pauli::Y;
    if (s == "sz") return Pauli::Z;
    if (s == "sp") return Pauli::Plus;
    if (s == "sm") return Pauli::Minus;
    if (s == "id") return Pauli::Identity;
    throw ConfigError("unknown operator name: " + s);
}

// Hermitian unit-trace state. Construction hermitizes and renormalizes;
// positivity is monitored by callers, never silently projected, because a
// learned memory kernel may transiently leave the physical set and hiding
// that would mask model pathologies.
template <class T>
class DensityMatrix {
public:
    DensityMatrix() = default;

    static DensityMatrix normalized(ComplexMatrix<T> m) {
        hermitize_inplace(m);
        T tr = trace(m).re;
        if (value(tr) == 0.0) throw NumericError("density matrix has zero trace");
        m *= (T(1.0) / tr);
        DensityMatrix rho;
        rho.m_ = std::move(m);
        return rho;
    }

    // Wrap without hermitizing or renormalizing; for steppers that manage
    // those themselves (or deliberately leave them off to expose drift).
    static DensityMatrix unchecked(ComplexMatrix<T> m) {
        DensityMatrix rho;
        rho.m_ = std::move(m);
        return rho;
    }

    // Basis state |index><index|.
    static DensityMatrix basis_state(int dim, int index) {
        if (index < 0 || index >= dim) throw IndexError("basis state index out of range");
        ComplexMatrix<T> m(dim);
        m.at(index, index).re = T(1.0);
        DensityMatrix rho;
        rho.m_ = std::move(m);
        return rho;
    }

    static DensityMatrix maximally_mixed(int dim) {
        ComplexMatrix<T> m(dim);
        for (int i = 0; i < dim; ++i) m.at(i, i).re = T(1.0 / dim);
        DensityMatrix rho;
        rho.m_ = std::move(m);
        return rho;
    }

    int dim() const { return m_.dim(); }
    const ComplexMatrix<T>& matrix() const { return m_; }
    ComplexMatrix<T>& matrix() { return m_; }

    T population(int index) const { return m_.at(index, index).re; }
    // population of |e> = index 0
    T excited_population() const { return m_.at(0, 0).re; }

    T purity() const {
        T p(0.0);
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j) fma_add(p, abs2(m_.at(i, j)), 1.0);
        return p;
    }

private:
    ComplexMatrix<T> m_;
};

// qubit shorthands in the |e> = 0, |g> = 1 convention
template <class T = double>
DensityMatrix<T> excited_state() {
    return DensityMatrix<T>::basis_state(2, 0);
}
template <class T = double>
DensityMatrix<T> ground_state() {
    return DensityMatrix<T>::basis_state(2, 1);
}

template <class T>
class Observable {
public:
    explicit Observable(ComplexMatrix<T> m) : m_(std::move(m)) {
        if (hermiticity_deviation(m_) > 1e-12)
            throw NumericError("observable must be Hermitian");
    }
    const ComplexMatrix<T>& matrix() const { return m_; }
    int dim() const { return m_.dim(); }

private:
    ComplexMatrix<T> m_;
};

// D(c, rho) = c rho c^dag - 1/2 {c^dag c, rho}
template <class T>
ComplexMatrix<T> dissipator(const ComplexMatrix<T>& c, const DensityMatrix<T>& rho) {
    if (c.dim() != rho.dim()) throw DimensionError("dissipator: c/rho dim mismatch");
    const int n = c.dim();
    ComplexMatrix<T> crho(n), out(n), cdc(n), anti(n);
    mul_into(crho, c, rho.matrix());
    mul_adjoint_into(out, crho, c);
    mul_into(cdc, adjoint(c), c);
    mul_into(anti, cdc, rho.matrix());
    add_scaled(out, -0.5, anti);
    mul_into(anti, rho.matrix(), cdc);
    add_scaled(out, -0.5, anti);
    return out;
}

// H(c, rho) = c rho + rho c^dag - Tr(rho (c + c^dag)) rho
template <class T>
ComplexMatrix<T> backaction(const ComplexMatrix<T>& c, const DensityMatrix<T>& rho) {
    if (c.dim() != rho.dim()) throw DimensionError("backaction: c/rho dim mismatch");
    const int n = c.dim();
    ComplexMatrix<T> out(n), tmp(n);
    mul_into(out, c, rho.matrix());
    mul_adjoint_into(tmp, rho.matrix(), c);
    out += tmp;
    T tr = trace(out).re; // Tr(c rho + rho c^dag) = Tr(rho (c + c^dag)), real
    add_scaled(out, -tr, rho.matrix());
    return out;
}

// Re Tr(O rho); the imaginary part must vanish for Hermitian O.
template <class T>
T expectation(const Observable<double>& o, const DensityMatrix<T>& rho) {
    if (o.dim() != rho.dim()) throw DimensionError("expectation: dim mismatch");
    Cplx<T> tr{};
    const int n = o.dim();
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) cfma(tr, o.matrix().at(i, k), rho.matrix().at(k, i));
    if (std::fabs(value(tr.im)) > 1e-10)
        throw NumericError("expectation of Hermitian observable has imaginary part");
    return tr.re;
}

} // namespace qdl
